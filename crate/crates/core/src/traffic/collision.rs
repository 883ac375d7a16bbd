//! Pairwise footprint overlap with sweep-and-prune on x.

use std::collections::BTreeSet;

use super::{CollisionEvent, VehicleState};
use crate::config::CONTACT_EPS;

/// Unordered pairs of agent ids whose footprints overlap (closed convention).
pub fn overlapping_pairs(vehicles: &[VehicleState]) -> Vec<(usize, usize)> {
    let rects: Vec<_> = vehicles.iter().map(|v| v.rect()).collect();
    let mut order: Vec<(f64, f64, usize)> = rects
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let rad = r.bounding_radius() + CONTACT_EPS;
            (r.center.x - rad, r.center.x + rad, i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    let mut out = Vec::new();
    for (k, &(_, hi, i)) in order.iter().enumerate() {
        for &(lo_j, _, j) in &order[k + 1..] {
            if lo_j > hi {
                break;
            }
            if rects[i].overlaps(&rects[j], CONTACT_EPS) {
                out.push(if i < j { (i, j) } else { (j, i) });
            }
        }
    }
    out.sort_unstable();
    out
}

/// Newly overlapping pairs at `time`. `contacts` carries the pairs in contact
/// on the previous call and is replaced by the current set, so a continuing
/// contact is reported only once.
pub fn detect_collisions(
    vehicles: &[VehicleState],
    time: f64,
    contacts: &mut BTreeSet<(String, String)>,
) -> Vec<CollisionEvent> {
    let mut current = BTreeSet::new();
    let mut events = Vec::new();
    for (i, j) in overlapping_pairs(vehicles) {
        let (a, b) = (&vehicles[i], &vehicles[j]);
        let key = if a.id <= b.id {
            (a.id.clone(), b.id.clone())
        } else {
            (b.id.clone(), a.id.clone())
        };
        if !contacts.contains(&key) {
            events.push(CollisionEvent {
                time,
                id_a: key.0.clone(),
                id_b: key.1.clone(),
                x: 0.5 * (a.pose.x + b.pose.x),
                y: 0.5 * (a.pose.y + b.pose.y),
            });
        }
        current.insert(key);
    }
    *contacts = current;
    events.sort_by(|x, y| (&x.id_a, &x.id_b).cmp(&(&y.id_a, &y.id_b)));
    events
}
