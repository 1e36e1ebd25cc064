use nalgebra::DMatrix;

/// Objective acceptance: `phi_y <= phi_x + eps_k`.
pub fn accept_objective(phi_y: f64, phi_x: f64, eps_k: f64) -> bool {
    phi_y <= phi_x + eps_k
}

/// Alternating monotonicity slack: flips between `eps` and `0` whenever
/// `k mod m == 0`, otherwise keeps `eps_prev`.
pub fn eps_schedule_step(eps_prev: f64, k: usize, m: usize, eps: f64) -> f64 {
    if m == 0 || k % m != 0 {
        eps_prev
    } else if eps_prev == 0.0 {
        eps
    } else {
        0.0
    }
}

/// Residual acceptance:
/// `ry <= min(rx + r0 * rho_k^k, K * r0 * (1 + n_aa)^-(1 + gamma))`.
#[allow(clippy::too_many_arguments)]
pub fn accept_residual(
    ry_norm: f64,
    rx_norm: f64,
    r0_norm: f64,
    rho_k: f64,
    k: usize,
    big_k: f64,
    gamma: f64,
    n_aa: usize,
) -> bool {
    let exponent = i32::try_from(k).unwrap_or(i32::MAX);
    let progress = rx_norm + r0_norm * rho_k.powi(exponent);
    let envelope = big_k * r0_norm * (1.0 + n_aa as f64).powf(-(1.0 + gamma));
    ry_norm <= progress.min(envelope)
}

/// End-of-cycle check: `phi_new <= phi_star + eps_c`.
pub fn cycle_accept(phi_new: f64, phi_star: f64, eps_c: f64) -> bool {
    phi_new <= phi_star + eps_c
}

/// Rows of `F` whose absolute row sum exceeds
/// `subset_scale * (mean absolute row sum)`; all rows when none do.
pub fn active_rows(f_mat: &DMatrix<f64>, subset_scale: f64) -> Vec<usize> {
    let p = f_mat.nrows();
    let row_sums: Vec<f64> = f_mat.row_iter().map(|r| r.iter().map(|v| v.abs()).sum()).collect();
    let threshold = subset_scale * row_sums.iter().sum::<f64>() / p.max(1) as f64;
    let active: Vec<usize> = row_sums
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > threshold)
        .map(|(i, _)| i)
        .collect();
    if active.is_empty() {
        (0..p).collect()
    } else {
        active
    }
}
