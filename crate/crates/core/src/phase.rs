//! Discrete phase-matrix design for a fixed precoder.
//!
//! The beyond-diagonal designer normalizes the two channel legs, builds the
//! Hermitian difference matrix `Π = ḡḡᴴ − H̄H̄ᴴ`, and turns its eigenbasis
//! into a symmetric unitary candidate `s·X·D·Xᵀ`. The candidate is projected
//! entrywise onto the phase alphabet and only accepted when it raises SE;
//! a row-major coordinate ascent then polishes the accepted matrix.
//!
//! The diagonal baseline co-phases each element's cascaded term.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::eig::{frobenius, hermitian_eig};
use crate::error::{Error, Result};
use crate::objective::PhaseObjective;
use crate::quantizer::{QuantSpec, ScaledCodeword};
use crate::scalar::{cis, dotc, norm_sqr_vec, Cplx, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDesignerConfig {
    /// Cap on full row-major sweeps of the coordinate ascent.
    pub max_sweeps: usize,
    /// Mixing weights `t` tried when moving the combining vector towards the
    /// current codeword; scored by projection correlation.
    pub corr_candidates: Vec<f64>,
    /// Spectra narrower than this skip the eigen-based candidate.
    pub bypass_tol: f64,
    /// Global phase offsets tried per candidate before projection, evenly
    /// spaced over one alphabet sector; `1` projects the candidate as is.
    pub rotation_steps: usize,
}

impl Default for PhaseDesignerConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 50,
            corr_candidates: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            bypass_tol: 1e-12,
            rotation_steps: 8,
        }
    }
}

impl PhaseDesignerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::Domain("phase_designer.max_sweeps must be at least 1".into()));
        }
        if self.corr_candidates.is_empty() || self.corr_candidates.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::Domain(
                "phase_designer.corr_candidates must be non-empty values in [0, 1]".into(),
            ));
        }
        if self.rotation_steps == 0 {
            return Err(Error::Domain("phase_designer.rotation_steps must be at least 1".into()));
        }
        if !(self.bypass_tol >= 0.0) {
            return Err(Error::Domain("phase_designer.bypass_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Intermediate quantities of one eigen-based design pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDesignState<T> {
    pub alpha: Array1<Cplx<T>>,
    pub beta: Array1<Cplx<T>>,
    pub g_bar: Array1<Cplx<T>>,
    pub h_bar: Array1<Cplx<T>>,
    pub pi_mat: Array2<Cplx<T>>,
    pub eigvecs: Array2<Cplx<T>>,
    pub eigvals: Vec<T>,
    pub q_mat: Array2<Cplx<T>>,
    pub gamma1: Array1<Cplx<T>>,
    pub gamma2: Array1<Cplx<T>>,
    pub phi_vec: Vec<T>,
    pub d_mat: Array2<Cplx<T>>,
    pub phi_candidate: Array2<Cplx<T>>,
}

fn czero<T: Real>() -> Cplx<T> {
    Cplx::new(T::zero(), T::zero())
}

fn arg_or_zero<T: Real>(z: Cplx<T>) -> T {
    if z.norm_sqr() == T::zero() {
        T::zero()
    } else {
        z.arg()
    }
}

/// `(H̄, ḡ)`, both unit norm.
pub type NormalizedChannels<T> = (Array1<Cplx<T>>, Array1<Cplx<T>>);

/// `ḡ = (α∘g)/‖α∘g‖` and `H̄ = Hβ/‖Hβ‖`.
pub fn normalize_channels<T: Real>(
    h: &Array2<Cplx<T>>,
    g: &Array1<Cplx<T>>,
    alpha: &[Cplx<T>],
    beta: &[Cplx<T>],
) -> Result<NormalizedChannels<T>> {
    let (m, n) = h.dim();
    if g.len() != m || alpha.len() != m || beta.len() != n {
        return Err(Error::Shape(format!(
            "H is {m}x{n}, g has {}, alpha has {}, beta has {}",
            g.len(),
            alpha.len(),
            beta.len()
        )));
    }
    let ag: Array1<Cplx<T>> = g.iter().zip(alpha).map(|(x, a)| a * x).collect();
    let hb: Array1<Cplx<T>> = (0..m)
        .map(|i| h.row(i).iter().zip(beta).fold(czero(), |acc, (x, b)| acc + x * b))
        .collect();
    let ng = norm_sqr_vec(ag.as_slice().unwrap()).sqrt();
    let nh = norm_sqr_vec(hb.as_slice().unwrap()).sqrt();
    if !(ng > T::zero()) {
        return Err(Error::DegenerateChannel("alpha∘g vanishes"));
    }
    if !(nh > T::zero()) {
        return Err(Error::DegenerateChannel("H·beta vanishes"));
    }
    Ok((hb.mapv(|z| z / nh), ag.mapv(|z| z / ng)))
}

/// `Π = ½(A + Aᴴ) − ½(B + Bᴴ)` with `A = ḡḡᴴ`, `B = H̄H̄ᴴ`.
pub fn build_difference_matrix<T: Real>(g_bar: &[Cplx<T>], h_bar: &[Cplx<T>]) -> Result<Array2<Cplx<T>>> {
    if g_bar.len() != h_bar.len() {
        return Err(Error::Shape(format!(
            "normalized channels differ in length: {} vs {}",
            g_bar.len(),
            h_bar.len()
        )));
    }
    let m = g_bar.len();
    let a = |i: usize, j: usize| g_bar[i] * g_bar[j].conj();
    let b = |i: usize, j: usize| h_bar[i] * h_bar[j].conj();
    Ok(Array2::from_shape_fn((m, m), |(i, j)| {
        let sym_a = (a(i, j) + a(j, i).conj()) * T::half();
        let sym_b = (b(i, j) + b(j, i).conj()) * T::half();
        sym_a - sym_b
    }))
}

impl<T: Real> PhaseDesignState<T> {
    /// Normalizes the channels and diagonalizes `Π`.
    pub fn prepare(
        h: &Array2<Cplx<T>>,
        g: &Array1<Cplx<T>>,
        alpha: Array1<Cplx<T>>,
        beta: Array1<Cplx<T>>,
    ) -> Result<Self> {
        let (h_bar, g_bar) = normalize_channels(h, g, alpha.as_slice().unwrap(), beta.as_slice().unwrap())?;
        let pi_mat = build_difference_matrix(g_bar.as_slice().unwrap(), h_bar.as_slice().unwrap())?;
        let eig = hermitian_eig(&pi_mat)?;
        let m = g_bar.len();
        Ok(Self {
            alpha,
            beta,
            g_bar,
            h_bar,
            pi_mat,
            eigvecs: eig.eigvecs,
            eigvals: eig.eigvals,
            q_mat: Array2::zeros((m, m)),
            gamma1: Array1::zeros(m),
            gamma2: Array1::zeros(m),
            phi_vec: vec![T::zero(); m],
            d_mat: Array2::zeros((m, m)),
            phi_candidate: Array2::zeros((m, m)),
        })
    }

    pub fn m_irs(&self) -> usize {
        self.g_bar.len()
    }

    /// Fills `Q`, `γ₁`, `γ₂`, `φ`, `D` and the raw candidate `s·X·D·Xᵀ`.
    ///
    /// Returns `None` when the spectrum is too narrow or does not change sign;
    /// the caller should fall back to coordinate ascent.
    pub fn build_transform(&mut self, bypass_tol: T) -> Option<&Array2<Cplx<T>>> {
        let m = self.m_irs();
        let l_max = *self.eigvals.first()?;
        let l_min = *self.eigvals.last()?;
        if m < 2
            || !(l_max - l_min >= bypass_tol.max(T::min_positive_value()))
            || !(l_max > T::zero() && l_min < T::zero())
        {
            return None;
        }
        let spread = l_max - l_min;
        let q11 = (-l_min / spread).sqrt();
        let qmm = (l_max / spread).sqrt();
        let last = m - 1;

        let mut q = Array2::from_shape_fn((m, m), |(i, j)| {
            if i == j {
                Cplx::new(T::one(), T::zero())
            } else {
                czero()
            }
        });
        q[[0, 0]] = Cplx::new(q11, T::zero());
        q[[last, last]] = Cplx::new(qmm, T::zero());
        q[[0, last]] = q[[last, last]];
        q[[last, 0]] = -q[[0, 0]];

        let mut gamma1 = Array1::from_elem(m, czero());
        gamma1[0] = q[[last, 0]];
        gamma1[last] = -q[[0, 0]];
        let mut gamma2 = Array1::from_elem(m, czero());
        gamma2[0] = q[[0, last]];
        gamma2[last] = q[[last, last]];

        // φ_k = −∠(H̄ᴴ x_k) − ∠(x_kᵀ ḡ): every term of H̄ᴴ X D Xᵀ ḡ lands on the real axis.
        let x = &self.eigvecs;
        let phi_vec: Vec<T> = (0..m)
            .map(|k| {
                let col = x.column(k);
                let left = self
                    .h_bar
                    .iter()
                    .zip(col.iter())
                    .fold(czero::<T>(), |acc, (h, xv)| acc + h.conj() * xv);
                let right = col
                    .iter()
                    .zip(self.g_bar.iter())
                    .fold(czero::<T>(), |acc, (xv, g)| acc + xv * g);
                -arg_or_zero(left) - arg_or_zero(right)
            })
            .collect();
        let d_diag: Vec<Cplx<T>> = phi_vec.iter().map(|&p| cis(p)).collect();
        let mut d_mat = Array2::from_elem((m, m), czero());
        for (k, &d) in d_diag.iter().enumerate() {
            d_mat[[k, k]] = d;
        }
        let s = cis(arg_or_zero(dotc(
            self.g_bar.as_slice().unwrap(),
            self.h_bar.as_slice().unwrap(),
        )));
        let candidate = Array2::from_shape_fn((m, m), |(i, j)| {
            (0..m).fold(czero::<T>(), |acc, k| acc + x[[i, k]] * d_diag[k] * x[[j, k]]) * s
        });

        self.q_mat = q;
        self.gamma1 = gamma1;
        self.gamma2 = gamma2;
        self.phi_vec = phi_vec;
        self.d_mat = d_mat;
        self.phi_candidate = candidate;
        Some(&self.phi_candidate)
    }
}

/// Entrywise nearest-phase projection.
pub fn project_matrix<T: Real>(phi: &Array2<Cplx<T>>, spec: &QuantSpec<T>) -> Array2<Cplx<T>> {
    phi.mapv(|z| spec.project(z))
}

pub fn is_feasible<T: Real>(phi: &Array2<Cplx<T>>, spec: &QuantSpec<T>) -> bool {
    phi.iter().all(|&z| spec.contains(z))
}

/// `|⟨A, B⟩_F| / (‖A‖_F ‖B‖_F)`; zero when either matrix vanishes.
pub fn correlation<T: Real>(a: &Array2<Cplx<T>>, b: &Array2<Cplx<T>>) -> T {
    let inner = a
        .iter()
        .zip(b.iter())
        .fold(czero::<T>(), |acc, (x, y)| acc + x.conj() * y);
    let denom = frobenius(a) * frobenius(b);
    if denom == T::zero() {
        T::zero()
    } else {
        inner.norm() / denom
    }
}

/// `‖ΦΦᴴ − I‖_F`, reported as a diagnostic only.
pub fn unitarity_defect<T: Real>(phi: &Array2<Cplx<T>>) -> T {
    let m = phi.nrows();
    let mut acc = T::zero();
    for i in 0..m {
        for j in 0..m {
            let mut z = phi
                .row(i)
                .iter()
                .zip(phi.row(j).iter())
                .fold(czero(), |a, (x, y)| a + x * y.conj());
            if i == j {
                z -= Cplx::new(T::one(), T::zero());
            }
            acc += z.norm_sqr();
        }
    }
    acc.sqrt()
}

/// Projects `phi_raw` and keeps it only if it strictly beats `phi_prev`.
/// Returns the chosen matrix and whether the candidate was accepted.
pub fn safeguarded_phase_update<T: Real>(
    phi_prev: &Array2<Cplx<T>>,
    phi_raw: &Array2<Cplx<T>>,
    spec: &QuantSpec<T>,
    ctx: &PhaseObjective<T>,
) -> (Array2<Cplx<T>>, bool) {
    let candidate = project_matrix(phi_raw, spec);
    if ctx.se(&candidate) > ctx.se(phi_prev) {
        (candidate, true)
    } else {
        (phi_prev.clone(), false)
    }
}

/// `e^{jθ}·raw` for the offset `θ` whose projection scores best, with `θ`
/// on `steps` points of `[0, 2π/|ζ|)`. Ties keep the smaller offset.
pub fn best_rotation<T: Real>(
    raw: &Array2<Cplx<T>>,
    spec: &QuantSpec<T>,
    ctx: &PhaseObjective<T>,
    steps: usize,
) -> Array2<Cplx<T>> {
    let sector = T::two() * T::PI() / T::from_usize(spec.len()).unwrap();
    let mut best: Option<(T, Array2<Cplx<T>>)> = None;
    for k in 0..steps.max(1) {
        let theta = sector * T::from_usize(k).unwrap() / T::from_usize(steps.max(1)).unwrap();
        let rotated = if k == 0 {
            raw.clone()
        } else {
            raw.mapv(|z| z * cis(theta))
        };
        let se = ctx.se(&project_matrix(&rotated, spec));
        if best.as_ref().is_none_or(|(b, _)| se > *b) {
            best = Some((se, rotated));
        }
    }
    best.expect("at least one offset").1
}

/// Unit-modulus matrix co-phasing every coupling term: entry `(i, j)` is
/// `e^{-j∠c_ij}` for `c_ij = conj((Hv)_i)·g_j`, and 1 where the term vanishes.
pub fn cophased_target<T: Real>(ctx: &PhaseObjective<T>) -> Array2<Cplx<T>> {
    let m = ctx.m_irs();
    Array2::from_shape_fn((m, m), |(i, j)| cis(-arg_or_zero(ctx.coupling(i, j))))
}

/// Row-major coordinate ascent over the phase alphabet.
///
/// Every entry is set to the alphabet value maximizing SE with the others
/// fixed; entries outside the alphabet (e.g. the zeros of a diagonal seed)
/// are always replaced. Stops after a sweep without changes or after
/// `max_sweeps` sweeps. Returns the matrix and the number of sweeps used.
pub fn greedy_phase_refine<T: Real>(
    phi: &Array2<Cplx<T>>,
    spec: &QuantSpec<T>,
    ctx: &PhaseObjective<T>,
    max_sweeps: usize,
) -> (Array2<Cplx<T>>, usize) {
    let m = ctx.m_irs();
    let mut out = phi.clone();
    let alphabet = spec.zeta();
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut amp = ctx.amplitude(&out);
        let mut changed = false;
        for i in 0..m {
            for j in 0..m {
                let w = ctx.coupling(i, j);
                let cur = out[[i, j]];
                let member = spec.contains(cur);
                let base = amp - w * cur;
                let mut best_val = cur;
                let mut best_pow = if member { amp.norm_sqr() } else { T::neg_infinity() };
                for &z in alphabet {
                    let p = (base + w * z).norm_sqr();
                    if p > best_pow {
                        best_pow = p;
                        best_val = z;
                    }
                }
                if best_val != cur {
                    out[[i, j]] = best_val;
                    amp = base + w * best_val;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Guard against round-off in the running amplitude.
    if is_feasible(phi, spec) && ctx.se(&out) < ctx.se(phi) {
        return (phi.clone(), sweeps);
    }
    (out, sweeps)
}

/// Diagonal IRS baseline: element `m` takes the alphabet phase closest to
/// the one co-phasing `conj(g_m)·(Hv)_m`. Off-diagonal entries are zero.
pub fn dirs_baseline<T: Real>(
    h: &Array2<Cplx<T>>,
    g: &Array1<Cplx<T>>,
    v: &ScaledCodeword<T>,
    spec: &QuantSpec<T>,
) -> Result<Array2<Cplx<T>>> {
    let (m, n) = h.dim();
    if g.len() != m || v.len() != n {
        return Err(Error::Shape(format!(
            "H is {m}x{n}, g has {}, v has {}",
            g.len(),
            v.len()
        )));
    }
    let vx = v.expanded();
    let mut phi = Array2::from_elem((m, m), czero());
    for k in 0..m {
        let hv = h.row(k).iter().zip(vx.iter()).fold(czero(), |acc, (a, b)| acc + a * b);
        let term = g[k].conj() * hv;
        phi[[k, k]] = spec.project(cis(arg_or_zero(term)));
    }
    Ok(phi)
}

pub fn is_diagonal_feasible<T: Real>(phi: &Array2<Cplx<T>>, spec: &QuantSpec<T>) -> bool {
    phi.indexed_iter()
        .all(|((i, j), &z)| if i == j { spec.contains(z) } else { z == czero() })
}

/// Result of one beyond-diagonal design pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BdPhaseStep<T> {
    pub phi: Array2<Cplx<T>>,
    pub se: T,
    /// Whether the eigen-based candidate was accepted by the safeguard.
    pub transform_accepted: bool,
    /// True when the eigen-based candidate was skipped.
    pub bypassed: bool,
    /// Whether the co-phasing candidate was accepted by the safeguard.
    pub cophase_accepted: bool,
    pub greedy_sweeps: usize,
    pub state: Option<PhaseDesignState<T>>,
}

/// One beyond-diagonal phase design pass for a fixed precoder.
///
/// The eigen-based candidate and the co-phasing candidate are each rotated
/// to their best global phase, projected and passed through the safeguard;
/// coordinate ascent then polishes the survivor.
///
/// `alpha` and `beta` carry the controlling vectors across outer iterations;
/// `beta` is moved towards the current codeword by the correlation line
/// search.
#[allow(clippy::too_many_arguments)]
pub fn design_bd_phase<T: Real>(
    h: &Array2<Cplx<T>>,
    g: &Array1<Cplx<T>>,
    v: &ScaledCodeword<T>,
    phi_prev: &Array2<Cplx<T>>,
    ctx: &PhaseObjective<T>,
    spec: &QuantSpec<T>,
    cfg: &PhaseDesignerConfig,
    alpha: &mut Array1<Cplx<T>>,
    beta: &mut Array1<Cplx<T>>,
) -> Result<BdPhaseStep<T>> {
    cfg.validate()?;
    let mut best: Option<(T, PhaseDesignState<T>)> = None;
    let target = v.codeword.mapv(|z| z / T::two().sqrt());
    for &t in &cfg.corr_candidates {
        let t = T::lit(t);
        let beta_t: Array1<Cplx<T>> = beta
            .iter()
            .zip(target.iter())
            .map(|(b, c)| b * (T::one() - t) + c * t)
            .collect();
        let mut state = match PhaseDesignState::prepare(h, g, alpha.clone(), beta_t) {
            Ok(s) => s,
            Err(Error::DegenerateChannel(_)) => continue,
            Err(e) => return Err(e.in_stage("phase design")),
        };
        let Some(raw) = state.build_transform(T::lit(cfg.bypass_tol)) else {
            continue;
        };
        let score = correlation(&project_matrix(raw, spec), raw);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, state));
        }
    }

    let (mut phi, transform_accepted, bypassed, state) = match best {
        Some((_, state)) => {
            *alpha = state.alpha.clone();
            *beta = state.beta.clone();
            let rotated = best_rotation(&state.phi_candidate, spec, ctx, cfg.rotation_steps);
            let (phi, accepted) = safeguarded_phase_update(phi_prev, &rotated, spec, ctx);
            (phi, accepted, false, Some(state))
        }
        None => (phi_prev.clone(), false, true, None),
    };
    let cophased = best_rotation(&cophased_target(ctx), spec, ctx, cfg.rotation_steps);
    let (next, cophase_accepted) = safeguarded_phase_update(&phi, &cophased, spec, ctx);
    phi = next;
    let (refined, sweeps) = greedy_phase_refine(&phi, spec, ctx, cfg.max_sweeps);
    phi = refined;
    let se = ctx.se(&phi);
    Ok(BdPhaseStep {
        phi,
        se,
        transform_accepted,
        bypassed,
        cophase_accepted,
        greedy_sweeps: sweeps,
        state,
    })
}
