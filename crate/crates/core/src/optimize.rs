//! Derivative-free minimizers for smooth scalar functions.

use crate::error::{Error, Result};

/// Golden-section search on `[lo, hi]`, stopping once the bracket is shorter
/// than `tol`. Returns `(x_min, f(x_min))`.
pub fn golden_section<F: FnMut(f64) -> Result<f64>>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("bad golden-section bracket [{lo}, {hi}] / tol {tol}")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Nelder-Mead simplex minimization in two dimensions, with every vertex
/// clamped to the box `[lo, hi]²`. Stops when the simplex spread in `f`
/// and its diameter both fall below `tol`, or after `max_evals` evaluations.
pub fn nelder_mead_2d<F: FnMut([f64; 2]) -> Result<f64>>(
    mut f: F,
    start: [f64; 2],
    step: f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_evals: usize,
) -> Result<([f64; 2], f64)> {
    let clamp = |p: [f64; 2]| [p[0].clamp(lo, hi), p[1].clamp(lo, hi)];
    let mut pts = [clamp(start), clamp([start[0] + step, start[1]]), clamp([start[0], start[1] + step])];
    if pts[1] == pts[0] {
        pts[1] = clamp([start[0] - step, start[1]]);
    }
    if pts[2] == pts[0] {
        pts[2] = clamp([start[0], start[1] - step]);
    }
    let mut vals = [f(pts[0])?, f(pts[1])?, f(pts[2])?];
    let mut evals = 3;
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

    while evals < max_evals {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = [pts[idx[0]], pts[idx[1]], pts[idx[2]]];
        vals = [vals[idx[0]], vals[idx[1]], vals[idx[2]]];
        let diam = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .map(|(a, b)| (pts[a][0] - pts[b][0]).abs().max((pts[a][1] - pts[b][1]).abs()))
            .fold(0.0, f64::max);
        if vals[2] - vals[0] <= tol && diam <= tol {
            break;
        }
        let centroid = lerp(pts[0], pts[1], 0.5);
        let reflected = clamp(lerp(pts[2], centroid, 2.0));
        let fr = f(reflected)?;
        evals += 1;
        if fr < vals[0] {
            let expanded = clamp(lerp(pts[2], centroid, 3.0));
            let fe = f(expanded)?;
            evals += 1;
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
        } else {
            let contracted =
                if fr < vals[2] { clamp(lerp(pts[2], centroid, 1.5)) } else { lerp(pts[2], centroid, 0.5) };
            let fc = f(contracted)?;
            evals += 1;
            if fc < vals[2].min(fr) {
                pts[2] = contracted;
                vals[2] = fc;
            } else {
                for v in 1..3 {
                    pts[v] = lerp(pts[0], pts[v], 0.5);
                    vals[v] = f(pts[v])?;
                    evals += 1;
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Ok((pts[best], vals[best]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| Ok((x - 1.3).powi(2) + 2.0), 0.0, 4.0, 1e-9).unwrap();
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn golden_rejects_bad_bracket() {
        assert!(golden_section(|x| Ok(x), 1.0, 1.0, 1e-6).is_err());
    }

    #[test]
    fn nelder_mead_rosenbrock_like() {
        let f = |p: [f64; 2]| Ok((p[0] - 0.7).powi(2) + 10.0 * (p[1] - p[0] * p[0]).powi(2));
        let (p, v) = nelder_mead_2d(f, [0.2, 0.2], 0.1, 0.0, 1.0, 1e-10, 5000).unwrap();
        assert!((p[0] - 0.7).abs() < 1e-4 && (p[1] - 0.49).abs() < 1e-4, "{p:?}");
        assert!(v < 1e-8);
    }

    #[test]
    fn nelder_mead_respects_box() {
        let f = |p: [f64; 2]| Ok(-(p[0] + p[1]));
        let (p, _) = nelder_mead_2d(f, [0.5, 0.5], 0.1, 0.0, 1.0, 1e-10, 2000).unwrap();
        assert!(p[0] <= 1.0 && p[1] <= 1.0);
        assert!(p[0] > 0.999 && p[1] > 0.999);
    }
}
