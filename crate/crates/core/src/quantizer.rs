//! Discrete alphabets: the 1-bit I/Q precoder set and the `2^L`-point IRS
//! phase set, with nearest-point projections.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::scalar::{cis, Cplx, Real};

/// The 1-bit I/Q alphabet `{1+j, 1-j, -1+j, -1-j}`.
pub fn xi_set<T: Real>() -> [Cplx<T>; 4] {
    let (p, n) = (T::one(), -T::one());
    [Cplx::new(p, p), Cplx::new(p, n), Cplx::new(n, p), Cplx::new(n, n)]
}

/// Phase resolution and amplitude of the IRS alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantSpec<T> {
    l_bits: u32,
    xi_amp: T,
    zeta: Vec<Cplx<T>>,
}

impl<T: Real> QuantSpec<T> {
    pub const MAX_BITS: u32 = 16;

    /// Unit-amplitude alphabet with `2^l_bits` phases.
    pub fn new(l_bits: u32) -> Result<Self> {
        Self::with_amplitude(l_bits, T::one())
    }

    pub fn with_amplitude(l_bits: u32, xi_amp: T) -> Result<Self> {
        if l_bits == 0 || l_bits > Self::MAX_BITS {
            return Err(Error::Domain(format!(
                "phase resolution must be in 1..={}, got {l_bits}",
                Self::MAX_BITS
            )));
        }
        if !(xi_amp > T::zero() && xi_amp.is_finite()) {
            return Err(Error::Domain(format!("amplitude must be positive, got {xi_amp}")));
        }
        let n = 1usize << l_bits;
        let step = T::two() * T::PI() / T::from_usize(n).unwrap();
        let zeta = (0..n)
            .map(|k| {
                // Quarter turns are written exactly so membership checks are bitwise.
                let unit = if (4 * k) % n == 0 {
                    match 4 * k / n {
                        0 => Cplx::new(T::one(), T::zero()),
                        1 => Cplx::new(T::zero(), T::one()),
                        2 => Cplx::new(-T::one(), T::zero()),
                        _ => Cplx::new(T::zero(), -T::one()),
                    }
                } else {
                    cis(step * T::from_usize(k).unwrap())
                };
                unit * xi_amp
            })
            .collect();
        Ok(Self { l_bits, xi_amp, zeta })
    }

    pub fn l_bits(&self) -> u32 {
        self.l_bits
    }

    pub fn xi_amp(&self) -> T {
        self.xi_amp
    }

    /// Alphabet in index order, `ζ_k = ξ·exp(j2πk/2^L)`.
    pub fn zeta(&self) -> &[Cplx<T>] {
        &self.zeta
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    pub fn contains(&self, z: Cplx<T>) -> bool {
        self.zeta.contains(&z)
    }

    /// Index of the nearest phase. Zero maps to index 0; equidistant
    /// phases resolve to the lower index.
    pub fn nearest_index(&self, z: Cplx<T>) -> usize {
        let r = z.norm();
        if r == T::zero() || !r.is_finite() {
            return 0;
        }
        let n = self.zeta.len();
        let step = T::two() * T::PI() / T::from_usize(n).unwrap();
        let mut angle = z.arg();
        if angle < T::zero() {
            angle += T::two() * T::PI();
        }
        let below = (angle / step).floor().to_usize().unwrap_or(0) % n;
        let above = (below + 1) % n;
        let u = z / r * self.xi_amp;
        let d_below = (u - self.zeta[below]).norm_sqr();
        let d_above = (u - self.zeta[above]).norm_sqr();
        if d_above < d_below || (d_above == d_below && above < below) {
            above
        } else {
            below
        }
    }

    /// Nearest alphabet member on the circle of radius `ξ`.
    pub fn project(&self, z: Cplx<T>) -> Cplx<T> {
        self.zeta[self.nearest_index(z)]
    }
}

/// Sign-based nearest point of the 1-bit alphabet. Zero components map to `+1`.
pub fn project_scalar_to_xi<T: Real>(z: Cplx<T>) -> Cplx<T> {
    let sgn = |x: T| if x >= T::zero() { T::one() } else { -T::one() };
    Cplx::new(sgn(z.re), sgn(z.im))
}

/// Entrywise projection onto the 1-bit alphabet.
pub fn project_to_xi<T: Real>(z: &[Cplx<T>]) -> Array1<Cplx<T>> {
    z.iter().map(|&v| project_scalar_to_xi(v)).collect()
}

pub fn project_to_zeta<T: Real>(z: Cplx<T>, spec: &QuantSpec<T>) -> Cplx<T> {
    spec.project(z)
}

pub fn is_xi_member<T: Real>(z: Cplx<T>) -> bool {
    let one = T::one();
    (z.re == one || z.re == -one) && (z.im == one || z.im == -one)
}

/// Gain that puts a length-`n` codeword of the 1-bit alphabet at total power `p_tot_w`.
pub fn power_scale<T: Real>(n: usize, p_tot_w: T) -> T {
    (p_tot_w / (T::two() * T::from_usize(n).unwrap())).sqrt()
}

pub fn dbm_to_watts<T: Real>(p_dbm: T) -> T {
    T::lit(10.0).powf((p_dbm - T::lit(30.0)) / T::lit(10.0))
}

/// A 1-bit codeword together with the analog gain meeting the power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCodeword<T> {
    pub codeword: Array1<Cplx<T>>,
    pub scale: T,
}

impl<T: Real> ScaledCodeword<T> {
    /// Wraps a codeword, scaling it to exactly `p_tot_w`.
    pub fn new(codeword: Array1<Cplx<T>>, p_tot_w: T) -> Result<Self> {
        if codeword.is_empty() {
            return Err(Error::Infeasible("empty codeword".into()));
        }
        if let Some(bad) = codeword.iter().position(|&z| !is_xi_member(z)) {
            return Err(Error::Infeasible(format!(
                "codeword entry {bad} = {} is not in the 1-bit alphabet",
                codeword[bad]
            )));
        }
        if !(p_tot_w > T::zero() && p_tot_w.is_finite()) {
            return Err(Error::Domain(format!("power budget must be positive, got {p_tot_w}")));
        }
        let scale = power_scale(codeword.len(), p_tot_w);
        Ok(Self { codeword, scale })
    }

    /// Projects a continuous vector onto the alphabet and scales it.
    pub fn from_continuous(v: &[Cplx<T>], p_tot_w: T) -> Result<Self> {
        Self::new(project_to_xi(v), p_tot_w)
    }

    pub fn len(&self) -> usize {
        self.codeword.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codeword.is_empty()
    }

    /// `scale · codeword`.
    pub fn expanded(&self) -> Array1<Cplx<T>> {
        self.codeword.mapv(|z| z * self.scale)
    }

    /// `tr(v vᴴ)`.
    pub fn power(&self) -> T {
        self.scale * self.scale * T::two() * T::from_usize(self.len()).unwrap()
    }

    pub fn is_feasible(&self, p_tot_w: T) -> bool {
        self.codeword.iter().all(|&z| is_xi_member(z))
            && self.power() <= p_tot_w * (T::one() + T::lit(1e-12)) + T::lit(1e-12)
    }
}
