use super::{Designation, Lot};

/// Marks the smallest lots green until their combined area reaches `gar` of
/// the total; the rest become building lots. Returns the lots ordered by
/// ascending area (ties by id). Exact equality satisfies the requirement.
pub fn allocate_green(mut lots: Vec<Lot>, gar: f64) -> Vec<Lot> {
    lots.sort_by(|a, b| a.area.total_cmp(&b.area).then(a.id.cmp(&b.id)));
    let total: f64 = lots.iter().map(|l| l.area).sum();
    let need = gar * total;
    let tolerance = 1e-9 * total;
    let mut acc = 0.0;
    for lot in &mut lots {
        if acc >= need - tolerance {
            lot.designation = Some(Designation::Building);
        } else {
            acc += lot.area;
            lot.designation = Some(Designation::Green);
        }
    }
    lots
}

/// Share of total lot area designated green.
pub fn green_fraction(lots: &[Lot]) -> f64 {
    let total: f64 = lots.iter().map(|l| l.area).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let green: f64 = lots.iter().filter(|l| l.designation == Some(Designation::Green)).map(|l| l.area).sum();
    green / total
}
