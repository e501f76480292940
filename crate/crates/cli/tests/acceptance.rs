//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS or FAIL line.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use geotypica::dataset::{build_dataset, tile, DatasetSettings, Split, ViewFile, MANIFEST_NAME};
use geotypica::geodata::{Edge, LandUse, Node, RoadClass, StreetNetwork};
use geotypica::geom::{Bounds2, Point2, Polygon};
use geotypica::layout::{allocate_green, default_land_use_table, extract_plots, Designation, LandUseParams, Lot, LotId};
use geotypica::materials::{hue_shift_rgb, Albedo, HueShift, MaterialLibrary};
use geotypica::metrics::ConfusionMatrix;
use geotypica::pipeline::{self, PipelineConfig};
use geotypica::render::{Camera, RenderSettings, Renderer, SunState, ViewMeta, DEFAULT_FOCAL_PX};
use geotypica::scenegen::{
    assemble_city, default_feature_table, place_trees, read_scene, sample_building, BuildingSpec, Feature, RoadLayout, SceneModel,
};
use geotypica::seed::Seed;
use geotypica::SemanticClass;
use image::{GrayImage, Luma, Rgb, RgbImage};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn samples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn within_time(start: Instant, limit_s: f64, detail: String) -> Outcome {
    let secs = start.elapsed().as_secs_f64();
    if secs < limit_s {
        Ok(format!("{detail}; {secs:.1} s < {limit_s} s"))
    } else {
        Err(format!("{detail}; took {secs:.1} s, limit {limit_s} s"))
    }
}

// ---------------------------------------------------------------- geometry

fn random_grid(seed: Seed) -> StreetNetwork {
    let mut rng = seed.rng();
    let (nx, ny) = (rng.random_range(1..=5usize), rng.random_range(1..=5usize));
    let spacing = rng.random_range(60.0..160.0);
    let jitter = 0.12 * spacing;
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let p = Point2::new(
                i as f64 * spacing + rng.random_range(-jitter..jitter),
                j as f64 * spacing + rng.random_range(-jitter..jitter),
            );
            nodes.push(Node { id: nodes.len() as u64, position: p });
        }
    }
    let mut pairs = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            if i < nx {
                pairs.push((idx(i, j), idx(i + 1, j)));
            }
            if j < ny {
                pairs.push((idx(i, j), idx(i, j + 1)));
            }
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            let u: f64 = rng.random();
            if u < 0.15 {
                pairs.push((idx(i, j), idx(i + 1, j + 1)));
            } else if u < 0.25 {
                pairs.push((idx(i, j), idx(i + 1, j + 1)));
                pairs.push((idx(i + 1, j), idx(i, j + 1)));
            }
        }
    }
    for _ in 0..rng.random_range(0..3) {
        let k = rng.random_range(0..pairs.len());
        let mut rest = pairs.clone();
        rest.remove(k);
        if connected(nodes.len(), &rest) {
            pairs = rest;
        }
    }
    let edges = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| Edge { id: k as u64, a, b, class: RoadClass::ALL[rng.random_range(0..6)], width: None })
        .collect();
    StreetNetwork::from_parts(nodes, edges)
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn geometry_suite() -> Outcome {
    let start = Instant::now();
    let table = default_land_use_table();
    let (mut faces_total, mut lots_total, mut undersized) = (0usize, 0usize, 0usize);
    for g in 0..200u64 {
        let seed = Seed(g).child("grid");
        let network = random_grid(seed);
        let ex = extract_plots(&network).map_err(|e| format!("grid {g}: {e}"))?;
        let planar = &ex.network;
        let pairs: Vec<(usize, usize)> = planar.edges.iter().map(|e| (e.a, e.b)).collect();
        check(connected(planar.nodes.len(), &pairs), || format!("grid {g}: planarized network disconnected"))?;
        let (faces, report) = geotypica::layout::bounded_faces(planar);
        let expected = planar.edges.len() as i64 - planar.nodes.len() as i64 + 1;
        let got = (faces.len() + report.irregular_faces) as i64;
        check(got == expected, || format!("grid {g}: {got} bounded faces, E - V + 1 = {expected}"))?;
        check(ex.plots.len() + ex.collapsed_plots == faces.len(), || {
            format!("grid {g}: {} plots + {} collapsed != {} faces", ex.plots.len(), ex.collapsed_plots, faces.len())
        })?;
        faces_total += faces.len();

        for plot in &ex.plots {
            let params = &table[&plot.land_use];
            let sub = geotypica::layout::subdivide_plot(plot, params, &mut seed.child_index("plot", u64::from(plot.id)).rng());
            let plot_area = plot.boundary.area();
            let lot_sum: f64 = sub.lots.iter().map(|l| l.boundary.area()).sum();
            check((lot_sum - plot_area).abs() <= 1e-6 * plot_area, || {
                format!("grid {g} plot {}: lots sum to {lot_sum}, plot area {plot_area}", plot.id)
            })?;
            if sub.undersized {
                undersized += 1;
            } else {
                for l in &sub.lots {
                    let a = l.boundary.area();
                    check(params.min_lot_area <= a && a <= params.max_lot_area, || {
                        format!(
                            "grid {g} plot {}: lot area {a} outside [{}, {}]",
                            plot.id, params.min_lot_area, params.max_lot_area
                        )
                    })?;
                }
            }
            lots_total += sub.lots.len();
            gar_property(allocate_green(sub.lots, params.gar), params.gar).map_err(|e| format!("grid {g} plot {}: {e}", plot.id))?;
        }
    }
    within_time(start, 60.0, format!("200 grids, {faces_total} faces, {lots_total} lots, {undersized} undersized plots"))
}

fn gar_property(lots: Vec<Lot>, gar: f64) -> Result<(), String> {
    let total: f64 = lots.iter().map(|l| l.area).sum();
    let green: Vec<f64> = lots.iter().filter(|l| l.designation == Some(Designation::Green)).map(|l| l.area).collect();
    check(lots.iter().all(|l| l.designation.is_some()), || "undesignated lot".into())?;
    let g: f64 = green.iter().sum();
    check(g >= gar * total, || format!("green {g} < GAR {gar} x {total}"))?;
    if let Some(largest) = green.iter().copied().reduce(f64::max) {
        check(g - largest < gar * total, || format!("green set not minimal: {g} - {largest} >= {gar} x {total}"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------- sampling

fn building_lot(boundary: Polygon, land_use: LandUse) -> Lot {
    Lot {
        id: LotId { plot: 0, index: 0 },
        parent_plot_id: 0,
        land_use,
        area: boundary.area(),
        boundary,
        designation: Some(Designation::Building),
    }
}

fn sampling_suite() -> Outcome {
    let start = Instant::now();
    let table = default_land_use_table();
    let features = default_feature_table();
    let lib = MaterialLibrary::builtin();
    let mut details = Vec::new();
    for (k, lu) in [LandUse::Residential, LandUse::Commercial].into_iter().enumerate() {
        let p = &table[&lu];
        let lot = building_lot(Polygon::rectangle(Point2::new(0.0, 0.0), Point2::new(40.0, 30.0)), lu);
        let mut rng = Seed(11).child_index("heights", k as u64).rng();
        let mut freq = BTreeMap::new();
        for _ in 0..30_000 {
            let b = sample_building(&lot, p, &features[&lu], &[], &lib, &mut rng).map_err(|e| e.to_string())?;
            let k = b.height / p.level_height;
            check(k.fract() == 0.0 && b.height == k * p.level_height, || format!("{lu}: height {} not a multiple of {}", b.height, p.level_height))?;
            check(f64::from(p.min_levels) <= k && k <= f64::from(p.max_levels), || format!("{lu}: {k} levels out of range"))?;
            *freq.entry(k as u32).or_insert(0u64) += 1;
        }
        let cats = f64::from(p.max_levels - p.min_levels + 1);
        let expected = 30_000.0 / cats;
        let stat: f64 = (p.min_levels..=p.max_levels)
            .map(|l| {
                let o = *freq.get(&l).unwrap_or(&0) as f64;
                (o - expected).powi(2) / expected
            })
            .sum();
        let pval = ChiSquared::new(cats - 1.0).map_err(|e| e.to_string())?.sf(stat);
        check(pval > 0.01, || format!("{lu}: chi-square {stat:.2}, p = {pval:.4}"))?;
        details.push(format!("{lu} p={pval:.3}"));
    }

    let mut rng = Seed(12).rng();
    let mut trees = 0;
    for i in 0..100u64 {
        let (w, h) = (rng.random_range(20.0..120.0), rng.random_range(20.0..120.0));
        let mut ring = vec![Point2::new(0.0, 0.0), Point2::new(w, 0.0), Point2::new(w, h), Point2::new(0.0, h)];
        if i % 2 == 1 {
            ring = vec![
                Point2::new(0.0, 0.0),
                Point2::new(w, 0.0),
                Point2::new(w, 0.5 * h),
                Point2::new(0.5 * w, 0.5 * h),
                Point2::new(0.5 * w, h),
                Point2::new(0.0, h),
            ];
        }
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let ring = ring.into_iter().map(|p| Point2::new(p.x * theta.cos() - p.y * theta.sin(), p.x * theta.sin() + p.y * theta.cos())).collect();
        let mut lot = building_lot(Polygon::new(ring), LandUse::Green);
        lot.designation = Some(Designation::Green);
        let params = LandUseParams { tree_density: rng.random_range(0.002..0.05), ..table[&LandUse::Green].clone() };
        let r = params.tree_radius();
        let placed = place_trees(&lot, &params, &mut Seed(13).child_index("lot", i).rng());
        for (a, t) in placed.iter().enumerate() {
            check(lot.boundary.contains(t.position), || format!("lot {i}: tree outside lot"))?;
            for u in &placed[a + 1..] {
                let d = t.position.distance(u.position);
                check(d >= r, || format!("lot {i}: trees {d} m apart, r = {r}"))?;
            }
        }
        trees += placed.len();
    }
    details.push(format!("{trees} trees on 100 lots"));
    within_time(start, 30.0, details.join(", "))
}

// ---------------------------------------------------------------- renderer

fn flat_scene(buildings: Vec<BuildingSpec>, half: f64) -> Result<SceneModel, String> {
    let extent = Bounds2 { min: Point2::new(-half, -half), max: Point2::new(half, half) };
    assemble_city(buildings, vec![], &RoadLayout::default(), &[], extent, None, &MaterialLibrary::builtin(), Seed(5)).map_err(|e| e.to_string())
}

fn sun(azimuth: f64, elevation: f64, ambient: f64) -> SunState {
    SunState { azimuth, elevation, irradiance: [1.0; 3], ambient }
}

fn lambert_ratio() -> Result<String, String> {
    let scene = flat_scene(vec![], 200.0)?;
    let r = Renderer::new(&scene);
    let cam = Camera::new([0.0, 0.0, scene.ground_level], 0.0, 0.0, 64, 64, 0.3, DEFAULT_FOCAL_PX);
    let high = r.render_linear(&cam, &sun(180.0, 90.0, 0.0));
    let low = r.render_linear(&cam, &sun(180.0, 30.0, 0.0));
    let mut worst: f64 = 0.0;
    for (a, b) in high.radiance.iter().zip(&low.radiance) {
        let (a, b) = (a.ok_or("sky pixel on plane")?, b.ok_or("sky pixel on plane")?);
        for k in 0..3 {
            worst = worst.max((a[k] / b[k] - 2.0).abs() / 2.0);
        }
    }
    check(worst <= 0.01, || format!("ratio off by {:.4}%", worst * 100.0))?;
    Ok(format!("max ratio deviation {:.2e}", worst))
}

fn full_shadow() -> Result<String, String> {
    let lib = MaterialLibrary::builtin();
    let material = lib.candidates(SemanticClass::Building, geotypica::materials::MaterialRole::Default, Some(LandUse::Commercial))[0].id.clone();
    let spec = BuildingSpec {
        lot: LotId { plot: 0, index: 0 },
        land_use: LandUse::Commercial,
        footprint: Polygon::rectangle(Point2::new(-10.0, -10.0), Point2::new(10.0, 10.0)),
        levels: 10,
        level_height: 3.0,
        height: 30.0,
        base_elevation: 0.0,
        material,
        wall_material: None,
        features: BTreeSet::from([Feature::FlatRoof]),
    };
    let scene = flat_scene(vec![spec], 150.0)?;
    let ground_albedo: BTreeSet<String> = scene
        .mesh
        .triangles
        .iter()
        .filter(|t| t.class == SemanticClass::Ground)
        .map(|t| format!("{:?}", scene.materials[t.material as usize]))
        .collect();
    check(ground_albedo.len() == 1, || format!("expected one ground material, got {ground_albedo:?}"))?;
    let gm = scene.mesh.triangles.iter().find(|t| t.class == SemanticClass::Ground).map(|t| &scene.materials[t.material as usize]).ok_or("no ground")?;
    let rho = match gm.albedo {
        Albedo::Constant(c) if gm.hue_shift.is_identity() => c,
        _ => return Err("ground material is not a plain constant".into()),
    };
    let s = sun(90.0, 45.0, 0.25);
    let expected = [0, 1, 2].map(|k| rho[k] / std::f64::consts::PI * s.irradiance[k] * s.ambient);

    let cam = Camera::new([0.0, 0.0, scene.ground_level], 0.0, 0.0, 400, 400, 0.25, DEFAULT_FOCAL_PX);
    let frame = cam.frame();
    let lin = Renderer::new(&scene).render_linear(&cam, &s);
    let mut shadowed = 0;
    for y in 0..cam.height {
        for x in 0..cam.width {
            let i = (y * cam.width + x) as usize;
            if lin.labels[i] != SemanticClass::Ground.id() {
                continue;
            }
            let d = cam.ray_direction(&frame, f64::from(x) + 0.5, f64::from(y) + 0.5);
            let t = (scene.ground_level - cam.position[2]) / d[2];
            let (gx, gy) = (cam.position[0] + t * d[0], cam.position[1] + t * d[1]);
            // The box shadow spans x in [-40, 10] for |y| <= 10; keep a 1 m margin.
            if (-39.0..=-11.0).contains(&gx) && gy.abs() <= 9.0 {
                let l = lin.radiance[i].ok_or("ground pixel without radiance")?;
                check(l == expected, || format!("shadow pixel ({x},{y}) = {l:?}, ambient term {expected:?}"))?;
                shadowed += 1;
            }
        }
    }
    check(shadowed > 1000, || format!("only {shadowed} shadow pixels checked"))?;
    Ok(format!("{shadowed} shadow pixels exact"))
}

fn fixture_scene(dir: &Path) -> Result<SceneModel, String> {
    let mut cfg = PipelineConfig::load(&samples().join("grid3x3/config.toml")).map_err(|e| e.join("; "))?;
    cfg.output.dir = dir.to_path_buf();
    cfg.render.hue_range = [0.0, 0.0];
    pipeline::generate(&cfg).map_err(|e| e.to_string())?;
    let f = std::fs::File::open(pipeline::scene_file(dir)).map_err(|e| e.to_string())?;
    read_scene(std::io::BufReader::new(f)).map_err(|e| e.to_string())
}

fn inside(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut c = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let ((xi, yi), (xj, yj)) = (poly[i], poly[j]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            c = !c;
        }
        j = i;
    }
    c
}

fn nadir_mask(scene: &SceneModel) -> Result<String, String> {
    let c = scene.bounds.min + (scene.bounds.max - scene.bounds.min) * 0.5;
    let cam = Camera::new([c.x, c.y, scene.ground_level], 0.0, 0.0, 1024, 1024, 0.3, DEFAULT_FOCAL_PX);
    let frame = cam.frame();
    let out = Renderer::new(scene).render(&cam, &sun(180.0, 60.0, 0.25));
    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut oracle = vec![false; w * h];
    for b in &scene.buildings {
        let ring = &b.footprint.ring;
        let proj = |z: f64| -> Option<Vec<(f64, f64)>> { ring.iter().map(|p| cam.project(&frame, [p.x, p.y, z])).collect() };
        let (Some(base), Some(top)) = (proj(b.base_elevation), proj(b.eave_elevation())) else { continue };
        let mut polys = vec![base.clone(), top.clone()];
        for i in 0..ring.len() {
            let j = (i + 1) % ring.len();
            polys.push(vec![base[i], base[j], top[j], top[i]]);
        }
        for poly in polys {
            let (x0, x1) = poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
            let (y0, y1) = poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
            let xs = (x0.floor().max(0.0) as usize)..(x1.ceil().min(w as f64).max(0.0) as usize);
            for y in (y0.floor().max(0.0) as usize)..(y1.ceil().min(h as f64).max(0.0) as usize) {
                for x in xs.clone() {
                    if inside(&poly, x as f64 + 0.5, y as f64 + 0.5) {
                        oracle[y * w + x] = true;
                    }
                }
            }
        }
    }
    let building = SemanticClass::Building.id();
    let agree = out.labels.as_raw().iter().zip(&oracle).filter(|(l, o)| (**l == building) == **o).count();
    let frac = agree as f64 / (w * h) as f64;
    let covered = oracle.iter().filter(|o| **o).count();
    check(covered > 0, || "no building in view".into())?;
    check(frac >= 0.99, || format!("agreement {:.4}", frac))?;
    Ok(format!("mask agreement {:.4} over {covered} footprint pixels", frac))
}

fn renderer_oracle() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = lambert_ratio()?;
    let b = full_shadow()?;
    let c = nadir_mask(&fixture_scene(dir.path())?)?;
    within_time(start, 120.0, format!("{a}; {b}; {c}"))
}

// ---------------------------------------------------------------- DR

fn with_shift(scene: &SceneModel, deg: f64) -> SceneModel {
    let mut s = scene.clone();
    for m in &mut s.materials {
        m.hue_shift = HueShift::new(deg);
    }
    s
}

fn hsv_sv(c: [f64; 3]) -> (f64, f64) {
    let max = c[0].max(c[1]).max(c[2]);
    let min = c[0].min(c[1]).min(c[2]);
    (if max > 0.0 { (max - min) / max } else { 0.0 }, max)
}

fn sv_preserved(c: [f64; 3], shift: HueShift) -> Result<(), String> {
    let (s0, v0) = hsv_sv(c);
    let (s1, v1) = hsv_sv(hue_shift_rgb(c, shift));
    check((s0 - s1).abs() <= 1e-6 && (v0 - v1).abs() <= 1e-6, || format!("{c:?} shifted by {}: S {s0}->{s1}, V {v0}->{v1}", shift.degrees()))
}

fn dr_suite() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = fixture_scene(dir.path())?;
    let settings = RenderSettings { width: 512, height: 512, ..RenderSettings::default() };
    let (_, cam, sun) = Renderer::new(&base).sample_view(Seed(3), 0, &settings).map_err(|e| e.to_string())?;

    let zero = Renderer::new(&with_shift(&base, 0.0)).render(&cam, &sun);
    let full = Renderer::new(&with_shift(&base, 360.0)).render(&cam, &sun);
    check(zero.rgb.as_raw() == full.rgb.as_raw() && zero.labels.as_raw() == full.labels.as_raw(), || "0 and 360 degree renders differ".into())?;

    let mut dr = base.clone();
    dr.randomize_materials((-180.0, 180.0), &mut Seed(4).rng());
    let on = Renderer::new(&dr).render(&cam, &sun);
    let off = Renderer::new(&base).render(&cam, &sun);
    check(on.labels.as_raw() == off.labels.as_raw(), || "labels differ with DR on".into())?;
    check(on.rgb.as_raw() != off.rgb.as_raw(), || "DR left the render unchanged".into())?;

    let mut checked = 0usize;
    for m in &dr.materials {
        if let Albedo::Constant(c) = m.albedo {
            sv_preserved(c, m.hue_shift)?;
            checked += 1;
        }
    }
    let lib = MaterialLibrary::load(&samples().join("city1km/materials.toml")).map_err(|e| format!("{e:?}"))?;
    let mut rng = Seed(6).rng();
    for _ in 0..32 {
        let shift = HueShift::new(rng.random_range(-180.0..=180.0));
        for m in &lib.materials {
            match m.albedo {
                Albedo::Constant(c) => sv_preserved(c, shift)?,
                Albedo::Texture { texture, .. } => {
                    for t in &lib.textures[texture as usize].texels {
                        sv_preserved(t.map(|v| f64::from(v) / 255.0), shift)?;
                    }
                }
            }
            checked += 1;
        }
    }
    Ok(format!("0/360 identical, labels identical, S/V preserved on {checked} albedos"))
}

// ---------------------------------------------------------------- dataset

fn marker_view(dir: &Path, id: u64) -> Result<ViewFile, String> {
    let rgb = RgbImage::from_fn(1024, 1024, |x, y| Rgb([(x % 256) as u8, (y % 256) as u8, ((x / 256) * 16 + y / 256) as u8]));
    let label = GrayImage::from_fn(1024, 1024, |x, y| Luma([((x / 7 + y / 5) % 4) as u8]));
    let (rp, lp) = (dir.join(format!("v{id}.rgb.png")), dir.join(format!("v{id}.label.png")));
    rgb.save(&rp).map_err(|e| e.to_string())?;
    label.save(&lp).map_err(|e| e.to_string())?;
    let camera = Camera::new([0.0; 3], 0.0, 0.0, 1024, 1024, 0.3, DEFAULT_FOCAL_PX);
    Ok(ViewFile { rgb: rp, label: lp, meta: ViewMeta { view_index: id, seed: id, camera, sun: sun(180.0, 45.0, 0.25) } })
}

fn dataset_suite() -> Outcome {
    let settings = DatasetSettings::default();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let views: Vec<ViewFile> = (0..10).map(|i| marker_view(tmp.path(), i)).collect::<Result<_, _>>()?;
    let rgb = image::open(&views[0].rgb).map_err(|e| e.to_string())?.to_rgb8();
    let label = image::open(&views[0].label).map_err(|e| e.to_string())?.to_luma8();
    let n = tile(&rgb, &label, 0, &settings).map_err(|e| e.to_string())?.len();
    check(n == 9, || format!("1024x1024 view gave {n} patches"))?;

    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (entries, summary) = build_dataset(&views, &a, "s", &settings, Seed(9)).map_err(|e| e.to_string())?;
    build_dataset(&views, &b, "s", &settings, Seed(9)).map_err(|e| e.to_string())?;
    let mut split_of: BTreeMap<u64, BTreeSet<Split>> = BTreeMap::new();
    for e in &entries {
        split_of.entry(e.view_id).or_default().insert(e.split);
    }
    check(split_of.values().all(|s| s.len() == 1), || "a view straddles train and val".into())?;
    let ma = std::fs::read(a.join(MANIFEST_NAME)).map_err(|e| e.to_string())?;
    let mb = std::fs::read(b.join(MANIFEST_NAME)).map_err(|e| e.to_string())?;
    check(!ma.is_empty() && ma == mb, || "manifests differ across reruns".into())?;

    for e in entries.iter().step_by(7) {
        let p = image::open(a.join(&e.path_rgb)).map_err(|err| err.to_string())?.to_rgb8();
        let l = image::open(a.join(&e.path_label)).map_err(|err| err.to_string())?.to_luma8();
        for (i, j) in [(0u32, 0u32), (511, 0), (0, 511), (300, 17)] {
            let (x, y) = (e.x + i, e.y + j);
            check(p.get_pixel(i, j).0 == [(x % 256) as u8, (y % 256) as u8, ((x / 256) * 16 + y / 256) as u8], || format!("rgb misaligned in {}", e.path_rgb))?;
            check(l.get_pixel(i, j).0[0] == ((x / 7 + y / 5) % 4) as u8, || format!("label misaligned in {}", e.path_label))?;
        }
    }
    Ok(format!("9 patches per view, {} train / {} val, manifests identical", summary.train_patches, summary.val_patches))
}

// ---------------------------------------------------------------- metrics

fn metrics_oracle() -> Outcome {
    let mut rng = Seed(21).rng();
    for case in 0..1000 {
        let pred: Vec<u8> = (0..256).map(|_| rng.random_range(0..4)).collect();
        let gt: Vec<u8> = (0..256).map(|_| rng.random_range(0..4)).collect();
        let mut cm = ConfusionMatrix::default();
        cm.accumulate(&pred, (16, 16), &gt, (16, 16), 1).map_err(|e| e.to_string())?;
        let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
        for y in 0..16 {
            for x in 0..16 {
                let (p, g) = (pred[y * 16 + x] == 1, gt[y * 16 + x] == 1);
                if p && g {
                    tp += 1;
                } else if p {
                    fp += 1;
                } else if g {
                    fn_ += 1;
                } else {
                    tn += 1;
                }
            }
        }
        check(cm == ConfusionMatrix { tp, fp, tn, fn_ }, || format!("case {case}: {cm:?} vs tally {tp} {fp} {tn} {fn_}"))?;
        let (tp, fp, tn, fn_) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
        let r = cm.report();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        if tp + fp + fn_ > 0.0 {
            check(close(r.iou, tp / (tp + fp + fn_)), || format!("case {case}: IoU {}", r.iou))?;
        }
        check(close(r.oa, (tp + tn) / 256.0), || format!("case {case}: OA {}", r.oa))?;
        if tp > 0.0 {
            check(close(r.f1, 2.0 * tp / (2.0 * tp + fp + fn_)), || format!("case {case}: F1 {}", r.f1))?;
        }
        check(r.iou <= r.f1, || format!("case {case}: IoU {} > F1 {}", r.iou, r.f1))?;
    }
    Ok("1000 random 16x16 pairs".into())
}

// ---------------------------------------------------------------- determinism, performance

fn run_all(out: &Path, jobs: usize) -> Result<BTreeMap<String, String>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_geotypica"))
        .args(["all", "--config"])
        .arg(samples().join("city1km/config.toml"))
        .arg("--out")
        .arg(out)
        .args(["--jobs", &jobs.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    check(status.status.success(), || format!("all --jobs {jobs} failed: {}", String::from_utf8_lossy(&status.stderr)))?;
    let text = std::fs::read_to_string(out.join(pipeline::REPORT_NAME)).map_err(|e| e.to_string())?;
    let report: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    serde_json::from_value(report["artifacts"].clone()).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let n = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let a = run_all(&tmp.path().join("a"), 1)?;
    let b = run_all(&tmp.path().join("b"), 1)?;
    let c = run_all(&tmp.path().join("c"), n)?;
    check(a.len() > 10, || format!("only {} artifacts", a.len()))?;
    check(a == b, || "artifacts differ between identical runs".into())?;
    check(a == c, || format!("artifacts differ between --jobs 1 and --jobs {n}"))?;
    Ok(format!("{} artifacts identical across two runs and --jobs 1 vs {n}", a.len()))
}

fn performance() -> Outcome {
    let lib = MaterialLibrary::builtin();
    let table = default_land_use_table();
    let features = default_feature_table();
    let lu = LandUse::Residential;
    let mut buildings = Vec::new();
    for i in 0..100u32 {
        for j in 0..50u32 {
            let (x, y) = (f64::from(i) * 18.0, f64::from(j) * 18.0);
            let mut lot = building_lot(Polygon::rectangle(Point2::new(x, y), Point2::new(x + 14.0, y + 14.0)), lu);
            lot.id = LotId { plot: i, index: j };
            let mut rng = Seed(31).child_index("lot", u64::from(i * 50 + j)).rng();
            buildings.push(sample_building(&lot, &table[&lu], &features[&lu], &[], &lib, &mut rng).map_err(|e| e.to_string())?);
        }
    }
    let extent = Bounds2 { min: Point2::new(0.0, 0.0), max: Point2::new(1800.0, 900.0) };
    let scene = assemble_city(buildings, vec![], &RoadLayout::default(), &[], extent, None, &lib, Seed(32)).map_err(|e| e.to_string())?;
    check(scene.buildings.len() == 5000, || format!("{} buildings", scene.buildings.len()))?;
    let cam = Camera::new([900.0, 450.0, scene.ground_level], 30.0, 5.0, 2048, 2048, 0.3, DEFAULT_FOCAL_PX);
    let start = Instant::now();
    let out = Renderer::new(&scene).render(&cam, &sun(150.0, 40.0, 0.25));
    let building = out.labels.as_raw().iter().filter(|l| **l == SemanticClass::Building.id()).count();
    check(building > 0, || "no building pixels".into())?;
    within_time(start, 10.0, format!("5000 buildings, {} triangles, 2048x2048", scene.mesh.triangles.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("geometry suite", geometry_suite),
        ("sampling suite", sampling_suite),
        ("renderer oracle", renderer_oracle),
        ("DR suite", dr_suite),
        ("dataset suite", dataset_suite),
        ("metrics oracle", metrics_oracle),
        ("determinism", determinism),
        ("render performance", performance),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1} s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
