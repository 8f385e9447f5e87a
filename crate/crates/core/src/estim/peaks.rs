//! Local-maximum search on periodogram maps.

use ndarray::Array3;

/// Relative tolerance under which two map values count as equal.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Peak {
    pub bin: [usize; 3],
    pub power: f64,
}

/// Local maxima of `power` over the 26-neighbourhood with circular wrap on
/// every axis, restricted to `bin[i] < limits[i]`. A peak must reach
/// `rel_threshold` times the largest in-window value and exceed
/// `floor_factor` times the in-window median. On plateaus the lowest linear
/// index wins. Returns at most `max_peaks`, strongest first, ties by bin.
pub(crate) fn find_peaks(
    power: &Array3<f64>,
    limits: [usize; 3],
    rel_threshold: f64,
    floor_factor: f64,
    max_peaks: usize,
) -> Vec<Peak> {
    let dims = power.dim();
    let dims = [dims.0, dims.1, dims.2];
    let limits = [
        limits[0].min(dims[0]),
        limits[1].min(dims[1]),
        limits[2].min(dims[2]),
    ];
    if limits.contains(&0) || max_peaks == 0 {
        return Vec::new();
    }
    let mut window: Vec<f64> = Vec::with_capacity(limits.iter().product());
    for i in 0..limits[0] {
        for j in 0..limits[1] {
            for k in 0..limits[2] {
                window.push(power[[i, j, k]]);
            }
        }
    }
    let max = window.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let mid = window.len() / 2;
    let median = *window.select_nth_unstable_by(mid, f64::total_cmp).1;
    let floor = (max * rel_threshold).max(median * floor_factor);

    let offsets = |d: usize| -> Vec<isize> {
        match d {
            1 => vec![0],
            2 => vec![0, 1],
            _ => vec![-1, 0, 1],
        }
    };
    let (oi, oj, ok) = (offsets(dims[0]), offsets(dims[1]), offsets(dims[2]));
    let linear = |b: [usize; 3]| (b[0] * dims[1] + b[1]) * dims[2] + b[2];

    let mut peaks = Vec::new();
    for i in 0..limits[0] {
        for j in 0..limits[1] {
            'cell: for k in 0..limits[2] {
                let v = power[[i, j, k]];
                if v < floor || v <= 0.0 {
                    continue;
                }
                let here = linear([i, j, k]);
                for &di in &oi {
                    for &dj in &oj {
                        for &dk in &ok {
                            let nb = [
                                (i as isize + di).rem_euclid(dims[0] as isize) as usize,
                                (j as isize + dj).rem_euclid(dims[1] as isize) as usize,
                                (k as isize + dk).rem_euclid(dims[2] as isize) as usize,
                            ];
                            let there = linear(nb);
                            if there == here {
                                continue;
                            }
                            let w = power[nb];
                            let tol = TIE_TOL * v.abs().max(w.abs());
                            if w > v + tol || ((w - v).abs() <= tol && there < here) {
                                continue 'cell;
                            }
                        }
                    }
                }
                peaks.push(Peak { bin: [i, j, k], power: v });
            }
        }
    }
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power).then(a.bin.cmp(&b.bin)));
    peaks.truncate(max_peaks);
    peaks
}

/// Vertex offset of the parabola through three equally spaced samples,
/// clamped to half a bin.
pub(crate) fn parabolic_offset(left: f64, centre: f64, right: f64) -> f64 {
    let denom = left - 2.0 * centre + right;
    if denom >= 0.0 || !denom.is_finite() {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}

/// Fractional peak position along every axis, interpolating the magnitude
/// on axes flagged in `interpolate`.
pub(crate) fn refine_peak(power: &Array3<f64>, bin: [usize; 3], interpolate: [bool; 3]) -> [f64; 3] {
    let dims = power.dim();
    let dims = [dims.0, dims.1, dims.2];
    let mut out = [bin[0] as f64, bin[1] as f64, bin[2] as f64];
    for axis in 0..3 {
        if !interpolate[axis] || dims[axis] < 3 {
            continue;
        }
        let at = |delta: isize| {
            let mut b = bin;
            b[axis] = (bin[axis] as isize + delta).rem_euclid(dims[axis] as isize) as usize;
            power[b].sqrt()
        };
        out[axis] += parabolic_offset(at(-1), at(0), at(1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(dims: (usize, usize, usize), points: &[([usize; 3], f64)]) -> Array3<f64> {
        let mut m = Array3::zeros(dims);
        for (b, v) in points {
            m[*b] = *v;
        }
        m
    }

    #[test]
    fn picks_local_maxima_in_order() {
        let m = map((8, 4, 1), &[([1, 1, 0], 2.0), ([5, 2, 0], 4.0), ([6, 2, 0], 3.0)]);
        let p = find_peaks(&m, [8, 4, 1], 0.1, 0.0, 10);
        let bins: Vec<_> = p.iter().map(|p| p.bin).collect();
        assert_eq!(bins, vec![[5, 2, 0], [1, 1, 0]]);
    }

    #[test]
    fn threshold_and_cap() {
        let m = map((16, 1, 1), &[([2, 0, 0], 1.0), ([8, 0, 0], 0.01)]);
        assert_eq!(find_peaks(&m, [16, 1, 1], 0.05, 0.0, 10).len(), 1);
        assert_eq!(find_peaks(&m, [16, 1, 1], 1e-3, 0.0, 10).len(), 2);
        assert_eq!(find_peaks(&m, [16, 1, 1], 1e-3, 0.0, 1).len(), 1);
    }

    #[test]
    fn plateau_keeps_lowest_bin() {
        let m = map((8, 1, 1), &[([3, 0, 0], 1.0), ([4, 0, 0], 1.0)]);
        let p = find_peaks(&m, [8, 1, 1], 0.5, 0.0, 10);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].bin, [3, 0, 0]);
    }

    #[test]
    fn wraps_around_edges() {
        let m = map((8, 1, 1), &[([0, 0, 0], 1.0), ([7, 0, 0], 2.0)]);
        let p = find_peaks(&m, [8, 1, 1], 0.1, 0.0, 10);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].bin, [7, 0, 0]);
    }

    #[test]
    fn window_limits_search() {
        let m = map((8, 1, 1), &[([1, 0, 0], 1.0), ([6, 0, 0], 2.0)]);
        let p = find_peaks(&m, [4, 1, 1], 0.1, 0.0, 10);
        assert_eq!(p[0].bin, [1, 0, 0]);
    }

    #[test]
    fn empty_map_has_no_peaks() {
        assert!(find_peaks(&Array3::zeros((4, 4, 4)), [4, 4, 4], 0.05, 0.0, 3).is_empty());
    }

    #[test]
    fn parabola_vertex() {
        // samples of -(x - 0.3)^2 at -1, 0, 1
        let f = |x: f64| 5.0 - (x - 0.3) * (x - 0.3);
        assert!((parabolic_offset(f(-1.0), f(0.0), f(1.0)) - 0.3).abs() < 1e-12);
        assert_eq!(parabolic_offset(1.0, 1.0, 1.0), 0.0);
    }
}
