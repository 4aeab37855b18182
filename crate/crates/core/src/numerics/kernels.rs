//! Row-major matrix kernels on raw slices.
//!
//! Every kernel sums over the shared dimension in ascending index order, so a
//! result is bit-identical to the textbook triple loop with the same order.

const MR: usize = 4;
const NR: usize = 8;

/// `out[m,n] (+)= a[m,k] · b[k,n]`
///
/// Full `MR × NR` output tiles are accumulated in registers across the
/// whole shared dimension from packed panels of `a` and `b`; ragged edges
/// fall back to the plain loop. Both paths add the `k` products to each
/// output in ascending order.
pub fn gemm(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize, accumulate: bool) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    if !accumulate {
        out.fill(0.0);
    }
    let m_full = m - m % MR;
    let n_full = n - n % NR;
    if m_full > 0 && n_full > 0 && k > 0 {
        // a_panels[i0 / MR][p][r] = a[i0 + r, p]
        let mut a_panels = vec![0.0; m_full * k];
        for (blk, panel) in a_panels.chunks_exact_mut(MR * k).enumerate() {
            for (p, col) in panel.chunks_exact_mut(MR).enumerate() {
                for (r, v) in col.iter_mut().enumerate() {
                    *v = a[(blk * MR + r) * k + p];
                }
            }
        }
        full_tiles(&a_panels, b, out, k, n, n_full);
    }
    let edge = |out: &mut [f64], rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| {
        for i in rows {
            let orow = &mut out[i * n + cols.start..i * n + cols.end];
            let arow = &a[i * k..(i + 1) * k];
            for (p, &a_ip) in arow.iter().enumerate() {
                let brow = &b[p * n + cols.start..p * n + cols.end];
                for (o, &b_pj) in orow.iter_mut().zip(brow) {
                    *o += a_ip * b_pj;
                }
            }
        }
    };
    edge(out, 0..m_full, n_full..n);
    edge(out, m_full..m, 0..n);
}

fn full_tiles(a_panels: &[f64], b: &[f64], out: &mut [f64], k: usize, n: usize, n_full: usize) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        unsafe { full_tiles_avx2(a_panels, b, out, k, n, n_full) };
        return;
    }
    full_tiles_body(a_panels, b, out, k, n, n_full);
}

/// Same code compiled with wider vectors. Multiplies and adds stay separate
/// instructions, so results match the portable build exactly.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn full_tiles_avx2(a_panels: &[f64], b: &[f64], out: &mut [f64], k: usize, n: usize, n_full: usize) {
    full_tiles_body(a_panels, b, out, k, n, n_full);
}

#[inline(always)]
fn full_tiles_body(a_panels: &[f64], b: &[f64], out: &mut [f64], k: usize, n: usize, n_full: usize) {
    let mut b_panel = vec![0.0; k * NR];
    for j0 in (0..n_full).step_by(NR) {
        for (p, row) in b_panel.chunks_exact_mut(NR).enumerate() {
            row.copy_from_slice(&b[p * n + j0..p * n + j0 + NR]);
        }
        for (blk, a_panel) in a_panels.chunks_exact(MR * k).enumerate() {
            let i0 = blk * MR;
            let mut acc = [[0.0; NR]; MR];
            for (r, row) in acc.iter_mut().enumerate() {
                row.copy_from_slice(&out[(i0 + r) * n + j0..(i0 + r) * n + j0 + NR]);
            }
            for (av, bv) in a_panel.chunks_exact(MR).zip(b_panel.chunks_exact(NR)) {
                for (row, &a_rp) in acc.iter_mut().zip(av) {
                    for (o, &b_pc) in row.iter_mut().zip(bv) {
                        *o += a_rp * b_pc;
                    }
                }
            }
            for (r, row) in acc.iter().enumerate() {
                out[(i0 + r) * n + j0..(i0 + r) * n + j0 + NR].copy_from_slice(row);
            }
        }
    }
}

/// `out[m,n] (+)= a[m,k] · b[n,k]ᵀ`
///
/// Transposes `b` once and runs [`gemm`], whose inner loop vectorizes where a
/// row-by-row dot product would not.
pub fn gemm_a_bt(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize, accumulate: bool) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    let mut bt = vec![0.0; k * n];
    for j in 0..n {
        for p in 0..k {
            bt[p * n + j] = b[j * k + p];
        }
    }
    gemm(a, &bt, out, m, k, n, accumulate);
}

/// `out[k,n] (+)= a[m,k]ᵀ · b[m,n]`, summing over rows of `a` in order.
pub fn gemm_at_b(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize, accumulate: bool) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    let mut at = vec![0.0; k * m];
    for r in 0..m {
        for i in 0..k {
            at[i * m + r] = a[r * k + i];
        }
    }
    gemm(&at, b, out, k, m, n, accumulate);
}

/// Adds `bias[n]` to every row of `out[m,n]`.
pub fn add_row_bias(out: &mut [f64], bias: &[f64]) {
    for row in out.chunks_exact_mut(bias.len()) {
        for (o, b) in row.iter_mut().zip(bias) {
            *o += b;
        }
    }
}

/// `out[n] += Σ_rows x[m,n]`
pub fn accumulate_column_sums(x: &[f64], out: &mut [f64]) {
    for row in x.chunks_exact(out.len()) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

/// `tanh` through one `exp` wherever that is as accurate as the library
/// routine: for `|x| ≥ ln 2 / 2`, `e = exp(−2|x|) ≤ 1/2`, so `1 − e` does not
/// cancel. Smaller inputs use the library routine.
#[inline]
pub fn tanh(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.5 * std::f64::consts::LN_2 {
        return x.tanh();
    }
    let e = (-2.0 * a).exp();
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
