//! EM iterations for the six covariance models, with optional clamping of
//! labeled rows.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{CovShape, Covariance, CovarianceModel};
use crate::error::{Error, Result};

/// Smallest total responsibility a component may carry.
const MIN_COMPONENT_WEIGHT: f64 = 1e-8;

/// Data transposed to `p x n` (so each observation is a contiguous
/// column) plus per-column variances used to scale the ridge and the
/// collapse floor.
pub(crate) struct Prepared {
    pub n: usize,
    pub p: usize,
    pub xt: DMatrix<f64>,
    /// Elementwise square of `xt`.
    pub xt_sq: DMatrix<f64>,
    /// `X^T X`, for pooled scatter matrices.
    pub gram: DMatrix<f64>,
    pub colvar: Vec<f64>,
}

impl Prepared {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let (n, p) = x.shape();
        let colvar = (0..p)
            .map(|j| {
                let col = x.column(j);
                let mean = col.mean();
                let v = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                if v > 0.0 {
                    v
                } else {
                    1.0
                }
            })
            .collect();
        Prepared {
            n,
            p,
            xt: x.transpose(),
            xt_sq: x.transpose().map(|v| v * v),
            gram: x.tr_mul(x),
            colvar,
        }
    }

}

/// Factorized covariance ready for density evaluation.
pub(crate) enum Factor {
    Spherical { var: f64 },
    Diagonal { vars: Vec<f64> },
    /// Lower Cholesky factor.
    Full { l: DMatrix<f64> },
}

impl Factor {
    fn log_det(&self, p: usize) -> f64 {
        match self {
            Factor::Spherical { var } => p as f64 * var.ln(),
            Factor::Diagonal { vars } => vars.iter().map(|v| v.ln()).sum(),
            Factor::Full { l } => 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>(),
        }
    }
}

/// Lower Cholesky factor of a symmetric matrix, or `None` if it is not
/// positive definite.
fn cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let l = m.clone().cholesky()?.unpack();
    l.diagonal().iter().all(|d| *d > 0.0).then_some(l)
}

/// Outcome of factorizing one component's covariance.
struct Factored {
    factor: Factor,
    cov: Covariance,
    rescued: bool,
}

/// Factors `cov`; if it fails or some direction has collapsed below
/// `ridge * colvar`, adds the ridge to the diagonal and retries once.
fn factor_with_ridge(cov: Covariance, data: &Prepared, ridge: f64) -> Result<Factored> {
    let p = data.p;
    let mean_var = data.colvar.iter().sum::<f64>() / p as f64;
    let attempt = |cov: &Covariance| -> Option<(Factor, bool)> {
        match cov {
            Covariance::Spherical(v) => {
                (*v > 0.0 && v.is_finite()).then_some((Factor::Spherical { var: *v }, *v < ridge * mean_var))
            }
            Covariance::Diagonal(vs) => {
                if vs.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return None;
                }
                let collapsed = vs.iter().zip(&data.colvar).any(|(v, c)| *v < ridge * c);
                Some((Factor::Diagonal { vars: vs.iter().copied().collect() }, collapsed))
            }
            Covariance::Full(m) => {
                let l = cholesky(m)?;
                let collapsed = (0..p).any(|j| l[(j, j)].powi(2) < ridge * data.colvar[j]);
                Some((Factor::Full { l }, collapsed))
            }
        }
    };
    if let Some((factor, false)) = attempt(&cov) {
        return Ok(Factored {
            factor,
            cov,
            rescued: false,
        });
    }
    let boosted = match cov {
        Covariance::Spherical(v) => Covariance::Spherical(v.max(0.0) + ridge * mean_var),
        Covariance::Diagonal(vs) => Covariance::Diagonal(DVector::from_iterator(
            p,
            vs.iter().zip(&data.colvar).map(|(v, c)| v.max(0.0) + ridge * c),
        )),
        Covariance::Full(mut m) => {
            for j in 0..p {
                m[(j, j)] += ridge * data.colvar[j];
            }
            Covariance::Full(m)
        }
    };
    match attempt(&boosted) {
        Some((factor, _)) => Ok(Factored {
            factor,
            cov: boosted,
            rescued: true,
        }),
        None => Err(Error::DegenerateFit(
            "covariance is not positive definite even after adding the ridge".into(),
        )),
    }
}

pub(crate) struct Params {
    pub weights: Vec<f64>,
    /// G x p
    pub means: DMatrix<f64>,
    pub covariances: Vec<Covariance>,
    factors: Vec<Factor>,
    /// Every component uses the same covariance.
    shared: bool,
    rescued: bool,
}

impl Params {
    /// Rebuilds factors from stored covariances (no ridge).
    pub fn from_parts(
        weights: Vec<f64>,
        means: DMatrix<f64>,
        covariances: Vec<Covariance>,
    ) -> Option<Self> {
        let factors = covariances
            .iter()
            .map(|c| match c {
                Covariance::Spherical(v) => Some(Factor::Spherical { var: *v }),
                Covariance::Diagonal(vs) => Some(Factor::Diagonal {
                    vars: vs.iter().copied().collect(),
                }),
                Covariance::Full(m) => cholesky(m).map(|l| Factor::Full { l }),
            })
            .collect::<Option<Vec<_>>>()?;
        let shared = covariances.windows(2).all(|w| w[0] == w[1]);
        Some(Params {
            weights,
            means,
            covariances,
            factors,
            shared,
            rescued: false,
        })
    }
}

/// Maximization step: closed-form estimates under `model`.
pub(crate) fn m_step(
    data: &Prepared,
    resp: &DMatrix<f64>,
    model: CovarianceModel,
    ridge: f64,
) -> Result<Params> {
    let (n, p) = (data.n, data.p);
    let groups = resp.ncols();
    let sizes: Vec<f64> = (0..groups).map(|g| resp.column(g).sum()).collect();
    if let Some(g) = sizes.iter().position(|&s| !(s >= MIN_COMPONENT_WEIGHT)) {
        return Err(Error::DegenerateFit(format!(
            "component {} has vanishing weight",
            g + 1
        )));
    }
    let total: f64 = sizes.iter().sum();
    let weights: Vec<f64> = sizes.iter().map(|s| s / total).collect();

    let sums = &data.xt * resp;
    let means = DMatrix::from_fn(groups, p, |g, j| sums[(j, g)] / sizes[g]);
    // weighted sums of squares, used by the diagonal shapes
    let squares = match model.shape() {
        CovShape::Full => None,
        _ => Some(&data.xt_sq * resp),
    };

    // Per-component weighted scatter, restricted to what the shape needs.
    let shape = model.shape();
    let mut scatters: Vec<Covariance> = Vec::with_capacity(groups);
    for g in 0..groups {
        match shape {
            // rows of `resp` sum to 1, so the pooled scatter is
            // X^T X - sum_g n_g mu_g mu_g^T
            CovShape::Full if model.is_shared() => {
                if g == 0 {
                    let mut m = data.gram.clone();
                    for (h, &ng) in sizes.iter().enumerate() {
                        let mu = means.row(h);
                        m.ger(-ng, &mu.transpose(), &mu.transpose(), 1.0);
                    }
                    m.fill_upper_triangle_with_lower_triangle();
                    scatters.push(Covariance::Full(m));
                }
            }
            CovShape::Full => {
                let mut centered = data.xt.clone();
                let mut weighted = DMatrix::zeros(p, n);
                for i in 0..n {
                    let r = resp[(i, g)];
                    let mut col = centered.column_mut(i);
                    for j in 0..p {
                        col[j] -= means[(g, j)];
                    }
                    weighted.column_mut(i).copy_from(&(col * r));
                }
                let mut m = &weighted * centered.transpose();
                m.fill_upper_triangle_with_lower_triangle();
                scatters.push(Covariance::Full(m));
            }
            CovShape::Diagonal | CovShape::Spherical => {
                let sq = squares.as_ref().expect("computed for diagonal shapes");
                let d = DVector::from_fn(p, |j, _| {
                    let mu = means[(g, j)];
                    (sq[(j, g)] - sizes[g] * mu * mu).max(0.0)
                });
                scatters.push(Covariance::Diagonal(d));
            }
        }
    }

    let pooled = |scatters: &[Covariance]| -> Covariance {
        let mut it = scatters.iter();
        let mut acc = it.next().cloned().expect("at least one component");
        for s in it {
            acc = match (acc, s) {
                (Covariance::Full(a), Covariance::Full(b)) => Covariance::Full(a + b),
                (Covariance::Diagonal(a), Covariance::Diagonal(b)) => Covariance::Diagonal(a + b),
                _ => unreachable!("scatters share one shape"),
            };
        }
        acc
    };
    let scale = |c: Covariance, by: f64| -> Covariance {
        match c {
            Covariance::Full(m) => Covariance::Full(m / by),
            Covariance::Diagonal(d) => Covariance::Diagonal(d / by),
            Covariance::Spherical(v) => Covariance::Spherical(v / by),
        }
    };
    let trace = |c: &Covariance| -> f64 {
        match c {
            Covariance::Diagonal(d) => d.sum(),
            Covariance::Full(m) => m.trace(),
            Covariance::Spherical(v) => *v * p as f64,
        }
    };

    let raw: Vec<Covariance> = match model {
        CovarianceModel::FullVarying | CovarianceModel::DiagonalVarying => scatters
            .into_iter()
            .zip(&sizes)
            .map(|(s, &ng)| scale(s, ng))
            .collect(),
        CovarianceModel::FullEqual | CovarianceModel::DiagonalEqual => {
            vec![scale(pooled(&scatters), total); groups]
        }
        CovarianceModel::SphericalVarying => scatters
            .iter()
            .zip(&sizes)
            .map(|(s, &ng)| Covariance::Spherical(trace(s) / (p as f64 * ng)))
            .collect(),
        CovarianceModel::SphericalEqual => {
            let t: f64 = scatters.iter().map(trace).sum();
            vec![Covariance::Spherical(t / (p as f64 * total)); groups]
        }
    };

    let mut factors = Vec::with_capacity(groups);
    let mut covariances = Vec::with_capacity(groups);
    let mut rescued = false;
    if model.is_shared() {
        let f = factor_with_ridge(raw.into_iter().next().expect("one component"), data, ridge)?;
        rescued = f.rescued;
        for _ in 0..groups {
            covariances.push(f.cov.clone());
            factors.push(match &f.factor {
                Factor::Spherical { var } => Factor::Spherical { var: *var },
                Factor::Diagonal { vars } => Factor::Diagonal { vars: vars.clone() },
                Factor::Full { l } => Factor::Full { l: l.clone() },
            });
        }
    } else {
        for c in raw {
            let f = factor_with_ridge(c, data, ridge)?;
            rescued |= f.rescued;
            covariances.push(f.cov);
            factors.push(f.factor);
        }
    }

    Ok(Params {
        weights,
        means,
        covariances,
        factors,
        shared: model.is_shared(),
        rescued,
    })
}

/// Log of `pi_g * N(x_i | mu_g, Sigma_g)` for every row and component.
pub(crate) fn log_joint(data: &Prepared, params: &Params) -> DMatrix<f64> {
    let (n, p) = (data.n, data.p);
    let groups = params.weights.len();
    let consts: Vec<f64> = (0..groups)
        .map(|g| {
            params.weights[g].ln()
                - 0.5 * (p as f64 * (2.0 * PI).ln() + params.factors[g].log_det(p))
        })
        .collect();
    let mut out = DMatrix::zeros(n, groups);
    let diagonal: Vec<usize> = (0..groups)
        .filter(|&g| !matches!(params.factors[g], Factor::Full { .. }))
        .collect();
    if !diagonal.is_empty() {
        // sum_j (x_j - m_j)^2 w_j = x^2.w - 2 x.(m w) + m^2.w
        let k = diagonal.len();
        let mut w = DMatrix::zeros(p, k);
        let mut mw = DMatrix::zeros(p, k);
        let mut offset = vec![0.0; k];
        for (c, &g) in diagonal.iter().enumerate() {
            for j in 0..p {
                let wj = match &params.factors[g] {
                    Factor::Spherical { var } => 1.0 / var,
                    Factor::Diagonal { vars } => 1.0 / vars[j],
                    Factor::Full { .. } => unreachable!("filtered above"),
                };
                let m = params.means[(g, j)];
                w[(j, c)] = wj;
                mw[(j, c)] = m * wj;
                offset[c] += m * m * wj;
            }
        }
        let mut d2 = data.xt_sq.tr_mul(&w);
        d2.gemm_tr(-2.0, &data.xt, &mw, 1.0);
        for (c, &g) in diagonal.iter().enumerate() {
            for i in 0..n {
                out[(i, g)] = consts[g] - 0.5 * (d2[(i, c)] + offset[c]).max(0.0);
            }
        }
    }
    // one whitening of the data serves every component of a shared factor
    let mut whitened: Option<(DMatrix<f64>, DMatrix<f64>)> = None;
    for g in 0..groups {
        let Factor::Full { l } = &params.factors[g] else {
            continue;
        };
        if whitened.is_none() || !params.shared {
            let linv = l
                .solve_lower_triangular(&DMatrix::identity(p, p))
                .expect("factor has a positive diagonal");
            whitened = Some((&linv * &data.xt, linv));
        }
        let (z, linv) = whitened.as_ref().expect("set above");
        let mu = linv * params.means.row(g).transpose();
        let mu = mu.as_slice();
        let col = out.column_mut(g);
        for (o, zi) in col.into_iter().zip(z.as_slice().chunks_exact(p)) {
            let d2: f64 = zi.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
            *o = consts[g] - 0.5 * d2;
        }
    }
    out
}

/// Expectation step. Returns responsibilities and the observed-data log
/// likelihood; clamped rows contribute their labeled component only.
pub(crate) fn e_step(
    data: &Prepared,
    params: &Params,
    clamp: Option<&[Option<usize>]>,
) -> (DMatrix<f64>, f64) {
    let mut lj = log_joint(data, params);
    let groups = lj.ncols();
    let mut loglik = 0.0;
    for i in 0..data.n {
        if let Some(g) = clamp.and_then(|c| c[i]) {
            loglik += lj[(i, g)];
            for h in 0..groups {
                lj[(i, h)] = if h == g { 1.0 } else { 0.0 };
            }
            continue;
        }
        let max = (0..groups).map(|g| lj[(i, g)]).fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for g in 0..groups {
            let e = (lj[(i, g)] - max).exp();
            lj[(i, g)] = e;
            sum += e;
        }
        loglik += max + sum.ln();
        for g in 0..groups {
            lj[(i, g)] /= sum;
        }
    }
    (lj, loglik)
}

pub(crate) struct EmRun {
    pub params: Params,
    pub resp: DMatrix<f64>,
    pub loglik: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
}

pub(crate) struct EmSettings<'a> {
    pub model: CovarianceModel,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub ridge: f64,
    pub clamp: Option<&'a [Option<usize>]>,
}

/// Alternates M and E steps from `resp` until the relative change in log
/// likelihood drops below `rel_tol`.
pub(crate) fn run_em(data: &Prepared, mut resp: DMatrix<f64>, s: &EmSettings<'_>) -> Result<EmRun> {
    let mut trace = Vec::new();
    let mut converged = false;
    let mut last: Option<(Params, f64)> = None;
    for _ in 0..s.max_iter {
        let params = m_step(data, &resp, s.model, s.ridge)?;
        let (next, ll) = e_step(data, &params, s.clamp);
        if !ll.is_finite() {
            return Err(Error::DegenerateFit("log-likelihood is not finite".into()));
        }
        trace.push(ll);
        let done = last
            .as_ref()
            .is_some_and(|(_, prev)| (ll - prev).abs() <= s.rel_tol * ll.abs());
        resp = next;
        last = Some((params, ll));
        if done {
            converged = true;
            break;
        }
    }
    let (params, loglik) = last.ok_or_else(|| Error::InvalidConfig("max_iter must be at least 1".into()))?;
    if params.rescued {
        return Err(Error::DegenerateFit(
            "a component collapsed below the ridge floor".into(),
        ));
    }
    Ok(EmRun {
        params,
        resp,
        loglik,
        trace,
        converged,
    })
}
