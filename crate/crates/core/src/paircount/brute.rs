use crate::exec::{self, Execution};
use crate::geometry::NormBody;
use crate::pointsets::PointSet;

use super::Band;

/// Every ordered pair `(i, j)`, `i != j`, tested with `gauge_diff(p_i, p_j)`.
pub fn count_in_band_brute(exec: Execution, set: &PointSet, body: &NormBody, band: Band) -> u64 {
    let d = set.dim();
    let coords = set.coords();
    exec::sum_u64(exec, set.len(), |i| {
        let p = &coords[i * d..(i + 1) * d];
        coords
            .chunks_exact(d)
            .enumerate()
            .filter(|&(j, q)| j != i && band.contains(body.gauge_diff(p, q)))
            .count() as u64
    })
}
