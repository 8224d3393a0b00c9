use super::scalar::dot;
use super::EigenSolution;

/// Minimum subspace overlap for two states at neighbouring points to be the
/// same track.
pub const TRACK_THRESHOLD: f64 = 0.5;

/// Match of one current state to a state of the previous point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackMatch {
    pub prev: Option<usize>,
    /// Weight of the current state inside the matched previous degenerate
    /// group, `Σ_{i∈G} |<p_i|c>|²`.
    pub overlap: f64,
}

/// Assign each state of `curr` to a state of `prev`.
///
/// Current states are first matched greedily to previous degenerate groups by
/// their weight inside each group's subspace (well defined however the group
/// basis was chosen), respecting group sizes and [`TRACK_THRESHOLD`]. Inside a
/// matched group the individual `|<p|c>|²` decide which member continues.
/// States left without a partner start new tracks.
pub fn track_states(prev: &EigenSolution, curr: &EigenSolution) -> Vec<TrackMatch> {
    let unmatched = vec![TrackMatch { prev: None, overlap: 0.0 }; curr.len()];
    if prev.is_empty() || curr.is_empty() || prev.dim() != curr.dim() {
        return unmatched;
    }
    let s: Vec<Vec<f64>> = prev
        .vectors
        .iter()
        .map(|p| curr.vectors.iter().map(|c| dot(p, c).norm_sqr()).collect())
        .collect();

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (gi, g) in prev.groups.iter().enumerate() {
        for j in 0..curr.len() {
            let w: f64 = g.iter().map(|&i| s[i][j]).sum();
            if w > TRACK_THRESHOLD {
                pairs.push((w, gi, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut capacity: Vec<usize> = prev.groups.iter().map(Vec::len).collect();
    let mut assigned_group: Vec<Option<(usize, f64)>> = vec![None; curr.len()];
    for (w, gi, j) in pairs {
        if assigned_group[j].is_none() && capacity[gi] > 0 {
            capacity[gi] -= 1;
            assigned_group[j] = Some((gi, w));
        }
    }

    let mut out = unmatched;
    for (gi, g) in prev.groups.iter().enumerate() {
        let members: Vec<usize> = (0..curr.len()).filter(|&j| matches!(assigned_group[j], Some((x, _)) if x == gi)).collect();
        let mut cand: Vec<(f64, usize, usize)> = Vec::new();
        for &i in g {
            for &j in &members {
                cand.push((s[i][j], i, j));
            }
        }
        cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_prev = vec![false; prev.len()];
        for (_, i, j) in cand {
            if out[j].prev.is_none() && !used_prev[i] {
                used_prev[i] = true;
                out[j] = TrackMatch { prev: Some(i), overlap: assigned_group[j].map_or(0.0, |(_, w)| w) };
            }
        }
    }
    out
}
