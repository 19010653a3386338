//! Exact rational arithmetic for the Gieseker-stability reduction on the
//! product of the surface with the projective line.
//!
//! Classes live in the four-element basis {1, sigma, fs, sigma^fs} of
//! H^*(Sigma x CP^1) with cohomology units: int sigma = int fs =
//! int sigma^fs = 1 and Vol(X) = tau for the polarization
//! omega = (tau/2) sigma + 2 fs. The rank-2 bundle is the split
//!
//! `E = S + Q`, `S = (r1+1) L x r2 O(2)`, `Q = r1 L x (r2+1) O(2)`,
//!
//! and every quantity here is a polynomial identity in (g, tau, k, r1, r2)
//! evaluated with arbitrary-precision rationals; no floating point enters
//! this module.
//!
//! The naming avoids the double-booked symbols of the source material:
//! `euler_alpha` is the surface Euler number 2 - 2g, `power_k` the tensor
//! power of the polarizing line bundle.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Result, VortexError};

pub type Rational = BigRational;

fn rat(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

fn half(n: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(2))
}

/// Serialize a rational as "p/q".
pub fn rational_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Inputs of the stability question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct VortexBundleSpec {
    /// Genus of the surface.
    pub g: u32,
    /// Even positive polarization constant.
    pub tau: u64,
    /// Tensor power of the polarizing line bundle.
    pub power_k: u32,
    pub r1: u32,
    pub r2: u32,
}

impl VortexBundleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 || self.tau % 2 != 0 {
            return Err(VortexError::Config(format!(
                "tau must be a positive even integer, got {}",
                self.tau
            )));
        }
        if self.r1 < 2 || self.r2 < 2 {
            return Err(VortexError::Config(format!(
                "need r1, r2 >= 2, got r1={}, r2={}",
                self.r1, self.r2
            )));
        }
        if self.power_k == 0 {
            return Err(VortexError::Config("power_k must be >= 1".into()));
        }
        Ok(())
    }

    /// Surface Euler number 2 - 2g.
    pub fn euler_alpha(&self) -> i64 {
        2 - 2 * self.g as i64
    }
}

/// Element of the even cohomology in the basis {1, sigma, fs, sigma^fs}.
#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyClass {
    pub one: Rational,
    pub sigma: Rational,
    pub fs: Rational,
    pub top: Rational,
}

impl CohomologyClass {
    pub fn zero() -> Self {
        CohomologyClass {
            one: Rational::zero(),
            sigma: Rational::zero(),
            fs: Rational::zero(),
            top: Rational::zero(),
        }
    }

    pub fn scalar(c: Rational) -> Self {
        CohomologyClass {
            one: c,
            ..Self::zero()
        }
    }

    pub fn two_form(sigma: Rational, fs: Rational) -> Self {
        CohomologyClass {
            one: Rational::zero(),
            sigma,
            fs,
            top: Rational::zero(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        CohomologyClass {
            one: &self.one + &other.one,
            sigma: &self.sigma + &other.sigma,
            fs: &self.fs + &other.fs,
            top: &self.top + &other.top,
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        CohomologyClass {
            one: &self.one * c,
            sigma: &self.sigma * c,
            fs: &self.fs * c,
            top: &self.top * c,
        }
    }

    /// Cup product truncated at the top degree; sigma^2 = fs^2 = 0.
    pub fn mul(&self, other: &Self) -> Self {
        CohomologyClass {
            one: &self.one * &other.one,
            sigma: &self.one * &other.sigma + &self.sigma * &other.one,
            fs: &self.one * &other.fs + &self.fs * &other.one,
            top: &self.one * &other.top
                + &self.top * &other.one
                + &self.sigma * &other.fs
                + &self.fs * &other.sigma,
        }
    }

    /// Integration over X in cohomology units.
    pub fn integral(&self) -> Rational {
        self.top.clone()
    }
}

/// First Chern classes and second Chern characters of the split bundle.
#[derive(Debug, Clone)]
pub struct ChernData {
    pub c1_sigma: CohomologyClass,
    pub c1_cp1: CohomologyClass,
    pub c1_s: CohomologyClass,
    pub c1_q: CohomologyClass,
    pub c1_e: CohomologyClass,
    pub ch2_s: CohomologyClass,
    pub ch2_q: CohomologyClass,
    pub ch2_e: CohomologyClass,
    pub omega: CohomologyClass,
    pub todd: CohomologyClass,
}

pub fn chern_data(spec: &VortexBundleSpec) -> Result<ChernData> {
    spec.validate()?;
    let alpha = rat(spec.euler_alpha());
    let (r1, r2) = (rat(spec.r1 as i64), rat(spec.r2 as i64));
    let c1_sigma = CohomologyClass::two_form(alpha.clone(), Rational::zero());
    let c1_cp1 = CohomologyClass::two_form(Rational::zero(), rat(2));
    let c1_s = CohomologyClass::two_form(&r1 + rat(1), rat(2) * &r2);
    let c1_q = CohomologyClass::two_form(r1.clone(), rat(2) * &r2 + rat(2));
    let c1_e = c1_s.add(&c1_q);
    // line-bundle summands: ch2 = c1^2 / 2
    let ch2_of = |c1: &CohomologyClass| c1.mul(c1).scale(&half(1));
    let ch2_s = ch2_of(&c1_s);
    let ch2_q = ch2_of(&c1_q);
    let ch2_e = ch2_s.add(&ch2_q);
    let omega = CohomologyClass::two_form(
        BigRational::new(BigInt::from(spec.tau), BigInt::from(2)),
        rat(2),
    );
    // Td = 1 + c1(Sigma)/2 + c1(CP1)/2 + c1(Sigma) c1(CP1) / 4
    let todd = CohomologyClass::scalar(Rational::one())
        .add(&c1_sigma.scale(&half(1)))
        .add(&c1_cp1.scale(&half(1)))
        .add(
            &c1_sigma
                .mul(&c1_cp1)
                .scale(&BigRational::new(BigInt::one(), BigInt::from(4))),
        );
    Ok(ChernData {
        c1_sigma,
        c1_cp1,
        c1_s,
        c1_q,
        c1_e,
        ch2_s,
        ch2_q,
        ch2_e,
        omega,
        todd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum WhichBundle {
    E,
    S,
}

/// Euler characteristic chi(X, V tensor L'^k) by termwise expansion of
/// ch(V) e^{k omega} Td(X) in cohomology units.
pub fn euler_characteristic(spec: &VortexBundleSpec, which: WhichBundle) -> Result<Rational> {
    let data = chern_data(spec)?;
    let k = rat(spec.power_k as i64);
    let (rank, c1, ch2) = match which {
        WhichBundle::E => (rat(2), data.c1_e.clone(), data.ch2_e.clone()),
        WhichBundle::S => (rat(1), data.c1_s.clone(), data.ch2_s.clone()),
    };
    let ch = CohomologyClass::scalar(rank).add(&c1).add(&ch2);
    // e^{k omega} = 1 + k omega + k^2 omega^2 / 2
    let k_omega = data.omega.scale(&k);
    let exp = CohomologyClass::scalar(Rational::one())
        .add(&k_omega)
        .add(&k_omega.mul(&k_omega).scale(&half(1)));
    Ok(ch.mul(&exp).mul(&data.todd).integral())
}

/// Reduction of the almost Hermitian Einstein problem to vortex data, and
/// the handoff parameters of the corresponding scalar equation.
#[derive(Debug, Clone)]
pub struct VortexReduction {
    pub r1_shifted: Rational,
    pub r2_shifted: Rational,
    pub mu: Rational,
    /// Coefficients (a, b, c, d, e, k) for the vortex family built on the
    /// shifted ranks.
    pub equation_coefficients: [Rational; 6],
}

pub fn reduce_to_vortex(spec: &VortexBundleSpec) -> Result<VortexReduction> {
    spec.validate()?;
    let k = rat(spec.power_k as i64);
    let tau = rat(spec.tau as i64);
    let alpha = rat(spec.euler_alpha());
    let r1_shifted = rat(spec.r1 as i64) + (&k * &tau + &alpha).clone() * half(1);
    let r2_shifted = rat(spec.r2 as i64) + &k + half(1);
    let mu = rat(2) * (&r2_shifted * (&r1_shifted + rat(1)) + &r1_shifted * (&r2_shifted + rat(1)));
    let a = rat(2) * &r2_shifted * (rat(2) + rat(2) * &r2_shifted);
    Ok(VortexReduction {
        equation_coefficients: [a, rat(2), rat(1), rat(1), mu.clone(), rat(1)],
        r1_shifted,
        r2_shifted,
        mu,
    })
}

/// The bracketed constant of the reduced almost Hermitian Einstein equation,
/// computed by the literal displayed formula. Cross-checked elsewhere
/// against tau * chi_E / Vol(X).
pub fn ahe_constant_formula(spec: &VortexBundleSpec) -> Result<Rational> {
    spec.validate()?;
    let alpha = rat(spec.euler_alpha());
    let k = rat(spec.power_k as i64);
    let tau = rat(spec.tau as i64);
    let (r1, r2) = (rat(spec.r1 as i64), rat(spec.r2 as i64));
    let first = &alpha
        + rat(2) * &alpha * &k
        + &k * &tau
        + &k * (&tau * (rat(2) * &r2 + rat(1)) + rat(2) * (rat(2) * &r1 + rat(1)));
    let second = &alpha * (rat(2) * &r2 + rat(1))
        + rat(2) * &r1
        + rat(1)
        + rat(2) * &k * &k * &tau
        + rat(2) * (&r1 * (&r2 + rat(1)) + &r2 * (&r1 + rat(1)));
    Ok(first + second)
}

/// The same constant via the Euler-characteristic route,
/// tau * chi(X, E tensor L'^k) / Vol(X) with Vol(X) = tau.
pub fn ahe_constant_euler(spec: &VortexBundleSpec) -> Result<Rational> {
    euler_characteristic(spec, WhichBundle::E)
}

/// Full stability report with every §4-level quantity cross-checked.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub spec: VortexBundleSpec,
    pub chi_e: Rational,
    pub chi_s: Rational,
    /// power_k (tau - 2) + (euler_alpha - 1) + 2 (r1 - r2)
    pub margin: Rational,
    pub verdict: bool,
    pub r1_shifted: Rational,
    pub r2_shifted: Rational,
    pub mu: Rational,
    pub ahe_constant: Rational,
    /// k tau + alpha > 0, the companion hypothesis of the equivalence.
    pub ktau_alpha_positive: bool,
    /// The shifted r2 is never integral (it carries the +1/2); recorded
    /// because the vortex reduction is applied to it as written.
    pub r2_shifted_half_integer: bool,
}

impl Serialize for StabilityReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("StabilityReport", 11)?;
        st.serialize_field("spec", &self.spec)?;
        st.serialize_field("chi_E", &rational_string(&self.chi_e))?;
        st.serialize_field("chi_S", &rational_string(&self.chi_s))?;
        st.serialize_field("margin", &rational_string(&self.margin))?;
        st.serialize_field("verdict", &self.verdict)?;
        st.serialize_field("R1", &rational_string(&self.r1_shifted))?;
        st.serialize_field("R2", &rational_string(&self.r2_shifted))?;
        st.serialize_field("mu", &rational_string(&self.mu))?;
        st.serialize_field("ahe_constant", &rational_string(&self.ahe_constant))?;
        st.serialize_field("ktau_alpha_positive", &self.ktau_alpha_positive)?;
        st.serialize_field("r2_shifted_half_integer", &self.r2_shifted_half_integer)?;
        st.end()
    }
}

/// Direct margin formula `k (tau - 2) + (alpha - 1) + 2 (r1 - r2)`.
pub fn stability_margin(spec: &VortexBundleSpec) -> Result<Rational> {
    spec.validate()?;
    Ok(rat(spec.power_k as i64) * (rat(spec.tau as i64) - rat(2))
        + (rat(spec.euler_alpha()) - rat(1))
        + rat(2) * (rat(spec.r1 as i64) - rat(spec.r2 as i64)))
}

/// Evaluate the stability inequality three independent ways and cross-check:
/// the margin formula, the Euler-characteristic difference chi_E - 2 chi_S,
/// and the shifted-rank gap 2 (R1 - R2). Any mismatch is an internal
/// arithmetic error, not bad input.
pub fn gieseker_verdict(spec: &VortexBundleSpec) -> Result<StabilityReport> {
    spec.validate()?;
    let margin = stability_margin(spec)?;
    let chi_e = euler_characteristic(spec, WhichBundle::E)?;
    let chi_s = euler_characteristic(spec, WhichBundle::S)?;
    let chi_route = &chi_e - rat(2) * &chi_s;
    if chi_route != margin {
        return Err(VortexError::InternalCheck(format!(
            "chi_E - 2 chi_S = {} disagrees with margin {}",
            rational_string(&chi_route),
            rational_string(&margin)
        )));
    }
    let red = reduce_to_vortex(spec)?;
    let gap_route = rat(2) * (&red.r1_shifted - &red.r2_shifted);
    if gap_route != margin {
        return Err(VortexError::InternalCheck(format!(
            "2 (R1 - R2) = {} disagrees with margin {}",
            rational_string(&gap_route),
            rational_string(&margin)
        )));
    }
    let ahe = ahe_constant_formula(spec)?;
    let ahe_euler = ahe_constant_euler(spec)?;
    if ahe != ahe_euler {
        return Err(VortexError::InternalCheck(format!(
            "AHE constant routes disagree: formula {} vs Euler {}",
            rational_string(&ahe),
            rational_string(&ahe_euler)
        )));
    }
    let ktau_alpha = rat(spec.power_k as i64) * rat(spec.tau as i64) + rat(spec.euler_alpha());
    Ok(StabilityReport {
        spec: *spec,
        verdict: margin.is_positive(),
        chi_e,
        chi_s,
        margin,
        r2_shifted_half_integer: !red.r2_shifted.is_integer(),
        r1_shifted: red.r1_shifted,
        r2_shifted: red.r2_shifted,
        mu: red.mu,
        ahe_constant: ahe,
        ktau_alpha_positive: ktau_alpha.is_positive(),
    })
}
