//! Restarted GMRES with right preconditioning.

use crate::radial::dot;

pub(crate) struct GmresOutcome {
    pub x: Vec<f64>,
    pub relative_residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Solves `A x = b` from `x = 0`, where `apply` computes `A v` and `precondition` approximates `A^{-1} v`.
pub(crate) fn gmres(
    apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    precondition: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_cycles: usize,
) -> GmresOutcome {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return GmresOutcome {
            x,
            relative_residual: 0.0,
        };
    }
    let mut rel = 1.0;
    for _ in 0..max_cycles {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut hess = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut rhs = vec![0.0; restart + 1];
        rhs[0] = beta;
        let mut steps = 0;
        for j in 0..restart {
            let z = precondition(&basis[j]);
            let mut w = apply(&z);
            zs.push(z);
            for (i, q) in basis.iter().enumerate() {
                let h = dot(&w, q);
                hess[i][j] = h;
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= h * qk;
                }
            }
            let wn = norm(&w);
            hess[j + 1][j] = wn;
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let d = hess[j][j].hypot(hess[j + 1][j]);
            cs[j] = hess[j][j] / d;
            sn[j] = hess[j + 1][j] / d;
            hess[j][j] = d;
            hess[j + 1][j] = 0.0;
            rhs[j + 1] = -sn[j] * rhs[j];
            rhs[j] *= cs[j];
            steps = j + 1;
            rel = rhs[j + 1].abs() / bnorm;
            if rel <= tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let s: f64 = (i + 1..steps).map(|k| hess[i][k] * y[k]).sum();
            y[i] = (rhs[i] - s) / hess[i][i];
        }
        for (k, z) in zs.iter().enumerate().take(steps) {
            for (xi, zi) in x.iter_mut().zip(z) {
                *xi += y[k] * zi;
            }
        }
        if rel <= tol {
            break;
        }
    }
    GmresOutcome {
        x,
        relative_residual: rel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 40;
        let mut apply = |v: &[f64]| {
            (0..n)
                .map(|i| {
                    let mut s = 4.0 * v[i];
                    if i > 0 {
                        s -= 1.5 * v[i - 1];
                    }
                    if i + 1 < n {
                        s -= 0.5 * v[i + 1];
                    }
                    s
                })
                .collect::<Vec<f64>>()
        };
        let mut ident = |v: &[f64]| v.to_vec();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let out = gmres(&mut apply, &mut ident, &b, 1e-12, 15, 20);
        let ax = apply(&out.x);
        let err: f64 = ax.iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-10);
    }
}
