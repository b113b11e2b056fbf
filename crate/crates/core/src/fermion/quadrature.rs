use crate::scalar::Real;

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub(crate) fn adaptive_simpson<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    // Split into panels first so that narrow features are not stepped over.
    let panels = ((b - a).abs().to_f64_lossy() * 8.0).ceil().max(1.0) as usize;
    let width = (b - a) / T::from_usize(panels).expect("panel count");
    let panel_tol = tol / T::from_usize(panels).expect("panel count");
    (0..panels)
        .map(|i| {
            let lo = a + width * T::from_usize(i).expect("panel index");
            let hi = if i + 1 == panels { b } else { lo + width };
            let (flo, fmid, fhi) = (f(lo), f((lo + hi) * T::lit(0.5)), f(hi));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            refine(f, lo, hi, flo, fmid, fhi, whole, panel_tol, MAX_DEPTH)
        })
        .fold(T::zero(), |acc, x| acc + x)
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
    let m = (a + b) * T::lit(0.5);
    let lm = (a + m) * T::lit(0.5);
    let rm = (m + b) * T::lit(0.5);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return left + right + delta / T::lit(15.0);
    }
    let half = tol * T::lit(0.5);
    refine(f, a, m, fa, flm, fm, left, half, depth - 1) + refine(f, m, b, fm, frm, fb, right, half, depth - 1)
}
