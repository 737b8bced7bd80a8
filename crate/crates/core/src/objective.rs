//! Cascaded channel, receive SNR and spectral efficiency.
//!
//! With a single user and a single stream there is no interference term,
//! so the SINR of the link reduces to `|(Hᴴ Φ g)ᴴ v|² / σ²`.

use ndarray::{Array1, Array2, ArrayView2};

use crate::channel::ChannelPair;
use crate::error::{Error, Result};
use crate::quantizer::{dbm_to_watts, ScaledCodeword};
use crate::scalar::{dotc, norm_sqr_vec, Cplx, Real};

/// `Hᴴ Φ g` for `H: M×N`, `Φ: M×M`, `g: M×1`.
pub fn effective_channel<T: Real>(
    h: &Array2<Cplx<T>>,
    phi: &Array2<Cplx<T>>,
    g: &Array1<Cplx<T>>,
) -> Result<Array1<Cplx<T>>> {
    let (m, _n) = h.dim();
    if phi.dim() != (m, m) || g.len() != m {
        return Err(Error::Shape(format!(
            "H is {:?}, Phi is {:?}, g has {} entries",
            h.dim(),
            phi.dim(),
            g.len()
        )));
    }
    let g_vec: Vec<_> = g.iter().copied().collect();
    let phi_g = mat_vec(phi.view(), &g_vec);
    Ok(Array1::from_shape_fn(h.ncols(), |n| {
        h.column(n)
            .iter()
            .zip(phi_g.iter())
            .fold(Cplx::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }))
}

pub(crate) fn mat_vec<T: Real>(a: ArrayView2<Cplx<T>>, x: &[Cplx<T>]) -> Array1<Cplx<T>> {
    Array1::from_shape_fn(a.nrows(), |i| {
        a.row(i)
            .iter()
            .zip(x)
            .fold(Cplx::new(T::zero(), T::zero()), |acc, (p, q)| acc + p * q)
    })
}

/// `|h_effᴴ v|² / σ²` with `v = scale · codeword`.
pub fn snr<T: Real>(h_eff: &[Cplx<T>], v: &ScaledCodeword<T>, sigma2: T) -> T {
    let inner = dotc(h_eff, v.codeword.as_slice().expect("contiguous codeword")) * v.scale;
    inner.norm_sqr() / sigma2
}

/// `log₂(1 + γ)` in bits/s/Hz.
pub fn spectral_efficiency<T: Real>(gamma: T) -> T {
    gamma.ln_1p() / T::LN_2()
}

/// Thermal noise power in watts from a density in dBm/Hz over `bandwidth_hz`.
/// Stopping test shared by the iterative solvers: the SE change is within
/// `eps`, shrunk proportionally once the SE itself drops below 1 bit/s/Hz.
pub(crate) fn settled<T: Real>(previous: T, current: T, eps: T) -> bool {
    (current - previous).abs() <= eps * current.abs().min(T::one())
}

pub fn noise_power<T: Real>(n0_dbm_hz: T, bandwidth_hz: T) -> T {
    dbm_to_watts(n0_dbm_hz + T::lit(10.0) * bandwidth_hz.log10())
}

/// Channels plus the receiver noise needed to score any `(v, Φ)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkObjective<T> {
    pub noise_power_w: T,
    pub bandwidth_hz: T,
    pub channels: ChannelPair<T>,
}

impl<T: Real> LinkObjective<T> {
    pub fn new(channels: ChannelPair<T>, noise_power_w: T, bandwidth_hz: T) -> Result<Self> {
        if !(noise_power_w > T::zero()) {
            return Err(Error::Domain(format!(
                "noise power must be positive, got {noise_power_w}"
            )));
        }
        if !(bandwidth_hz > T::zero()) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth_hz}")));
        }
        if !channels.is_finite() {
            return Err(Error::Domain("channel contains non-finite entries".into()));
        }
        if channels.g_irs_user.len() != channels.m_irs() {
            return Err(Error::Shape("g length differs from IRS size".into()));
        }
        Ok(Self {
            noise_power_w,
            bandwidth_hz,
            channels,
        })
    }

    pub fn n_bs(&self) -> usize {
        self.channels.n_bs()
    }

    pub fn m_irs(&self) -> usize {
        self.channels.m_irs()
    }

    pub fn snr(&self, v: &ScaledCodeword<T>, phi: &Array2<Cplx<T>>) -> Result<T> {
        let h_eff = effective_channel(&self.channels.h_bs_irs, phi, &self.channels.g_irs_user)?;
        if h_eff.len() != v.len() {
            return Err(Error::Shape(format!(
                "precoder has {} entries, BS has {} antennas",
                v.len(),
                h_eff.len()
            )));
        }
        Ok(snr(h_eff.as_slice().unwrap(), v, self.noise_power_w))
    }

    pub fn spectral_efficiency(&self, v: &ScaledCodeword<T>, phi: &Array2<Cplx<T>>) -> Result<T> {
        self.snr(v, phi).map(spectral_efficiency)
    }

    /// Objective seen by the precoder design for a fixed phase matrix.
    pub fn precoder_context(&self, phi: &Array2<Cplx<T>>, p_tot_w: T) -> Result<PrecoderObjective<T>> {
        let h_eff = effective_channel(&self.channels.h_bs_irs, phi, &self.channels.g_irs_user)?;
        Ok(PrecoderObjective {
            h_eff,
            sigma2: self.noise_power_w,
            p_tot_w,
        })
    }

    /// Objective seen by the phase design for a fixed precoder.
    pub fn phase_context(&self, v: &ScaledCodeword<T>) -> Result<PhaseObjective<T>> {
        if v.len() != self.n_bs() {
            return Err(Error::Shape(format!(
                "precoder has {} entries, BS has {} antennas",
                v.len(),
                self.n_bs()
            )));
        }
        let hv = mat_vec(self.channels.h_bs_irs.view(), v.expanded().as_slice().unwrap());
        Ok(PhaseObjective {
            hv,
            g: self.channels.g_irs_user.clone(),
            sigma2: self.noise_power_w,
        })
    }
}

/// SE as a function of the precoder, with `h_eff = Hᴴ Φ g` frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderObjective<T> {
    pub h_eff: Array1<Cplx<T>>,
    pub sigma2: T,
    pub p_tot_w: T,
}

impl<T: Real> PrecoderObjective<T> {
    pub fn se(&self, v: &ScaledCodeword<T>) -> T {
        spectral_efficiency(snr(self.h_eff.as_slice().unwrap(), v, self.sigma2))
    }

    /// SE of an arbitrary vector rescaled to the power budget. A zero vector scores 0.
    pub fn se_continuous(&self, v: &[Cplx<T>]) -> T {
        let energy = norm_sqr_vec(v);
        if energy == T::zero() {
            return T::zero();
        }
        let inner = dotc(self.h_eff.as_slice().unwrap(), v);
        let gamma = inner.norm_sqr() * self.p_tot_w / (energy * self.sigma2);
        spectral_efficiency(gamma)
    }

    /// SE of the projected, power-scaled version of `v`.
    pub fn se_quantized(&self, v: &[Cplx<T>]) -> Result<(ScaledCodeword<T>, T)> {
        let cw = ScaledCodeword::from_continuous(v, self.p_tot_w)?;
        let se = self.se(&cw);
        Ok((cw, se))
    }
}

/// SE as a function of the phase matrix with `u = H v` frozen.
///
/// The received amplitude is `uᴴ Φ g = Σᵢⱼ conj(uᵢ) Φᵢⱼ gⱼ`, the conjugate
/// of `(Hᴴ Φ g)ᴴ v`; single-entry changes of `Φ` update it in O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseObjective<T> {
    pub hv: Array1<Cplx<T>>,
    pub g: Array1<Cplx<T>>,
    pub sigma2: T,
}

impl<T: Real> PhaseObjective<T> {
    pub fn m_irs(&self) -> usize {
        self.g.len()
    }

    /// Weight multiplying `Φ(i, j)` in the received amplitude.
    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> Cplx<T> {
        self.hv[i].conj() * self.g[j]
    }

    pub fn amplitude(&self, phi: &Array2<Cplx<T>>) -> Cplx<T> {
        let phi_g = mat_vec(phi.view(), self.g.as_slice().unwrap());
        dotc(self.hv.as_slice().unwrap(), phi_g.as_slice().unwrap())
    }

    pub fn se_from_amplitude(&self, amp: Cplx<T>) -> T {
        spectral_efficiency(amp.norm_sqr() / self.sigma2)
    }

    pub fn se(&self, phi: &Array2<Cplx<T>>) -> T {
        self.se_from_amplitude(self.amplitude(phi))
    }

    /// True when no phase matrix can produce a non-zero amplitude.
    pub fn is_degenerate(&self) -> bool {
        norm_sqr_vec(self.hv.as_slice().unwrap()) == T::zero() || norm_sqr_vec(self.g.as_slice().unwrap()) == T::zero()
    }
}
