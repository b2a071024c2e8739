/// Solves `(I - theta * Lap) x = b` in place, where `Lap` is the 1D
/// cell-centred Neumann Laplacian scaled by `dx^2`:
/// rows `[1, -2, 1]` inside and `[-1, 1]` at both ends.
///
/// `scratch` must have the same length as `b`.
pub fn solve_neumann(theta: f64, b: &mut [f64], scratch: &mut [f64]) {
    let n = b.len();
    debug_assert_eq!(scratch.len(), n);
    if theta == 0.0 || n == 0 {
        return;
    }
    if n == 1 {
        return;
    }
    let off = -theta;
    let diag = |k: usize| {
        if k == 0 || k == n - 1 {
            1.0 + theta
        } else {
            1.0 + 2.0 * theta
        }
    };
    // forward sweep; scratch holds the modified super-diagonal
    let mut denom = diag(0);
    scratch[0] = off / denom;
    b[0] /= denom;
    for k in 1..n {
        denom = diag(k) - off * scratch[k - 1];
        scratch[k] = off / denom;
        b[k] = (b[k] - off * b[k - 1]) / denom;
    }
    for k in (0..n - 1).rev() {
        b[k] -= scratch[k] * b[k + 1];
    }
}
