//! Generalized Hénon maps of C².
//!
//! A factor is `g_i(z, w) = (w, P_i(w) + a_i z)` with `deg P_i >= 2` and
//! `a_i != 0`; a map is a composition `g = g_1 ∘ … ∘ g_m`, applied here in
//! list order (factor 1 first). The composed degree is `d = Π deg P_i`, the
//! Jacobian determinant is the constant `(−1)^m Π a_i`, and only the modulus
//! `|a| = Π |a_i|` enters any dimension formula, so maps are classified as
//! volume decreasing (`|a| < 1`) or volume preserving (`|a| = 1`); larger
//! moduli are rejected (work with the inverse map instead).

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::{fmt_g17, poly_eval, poly_eval_with_deriv, poly_roots};

/// Coordinate modulus beyond which an orbit is declared escaped.
pub const ESCAPE_RADIUS: f64 = 1e8;

/// Tolerance band around `|a| = 1` within which a map counts as volume
/// preserving (also used by the full-dimension diagnostics).
pub const VOLUME_PRESERVING_TOL: f64 = 1e-12;

/// A point of C².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex2 {
    pub z: Complex64,
    pub w: Complex64,
}

impl Complex2 {
    pub fn new(z: Complex64, w: Complex64) -> Self {
        Self { z, w }
    }

    /// Both coordinates finite?
    pub fn is_finite(&self) -> bool {
        self.z.re.is_finite() && self.z.im.is_finite() && self.w.re.is_finite() && self.w.im.is_finite()
    }

    /// Sup-norm of the coordinate moduli.
    pub fn max_norm(&self) -> f64 {
        self.z.norm().max(self.w.norm())
    }

    /// Sup-norm distance to another point.
    pub fn dist(&self, other: &Complex2) -> f64 {
        (self.z - other.z).norm().max((self.w - other.w).norm())
    }
}

/// A 2×2 complex matrix, row major: `[[m00, m01], [m10, m11]]`.
#[derive(Clone, Copy, Debug)]
pub struct Jacobian2 {
    pub m: [[Complex64; 2]; 2],
}

impl Jacobian2 {
    pub fn identity() -> Self {
        Self {
            m: [
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            ],
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Matrix product `self * rhs` (apply `rhs` first).
    pub fn mul(&self, rhs: &Jacobian2) -> Jacobian2 {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        Jacobian2 { m: out }
    }

    /// Largest entry modulus; used for overflow-safe rescaling of long products.
    pub fn max_entry(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Scale every entry by `1/s`.
    pub fn scaled(&self, s: f64) -> Jacobian2 {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for cell in row.iter_mut() {
                *cell /= s;
            }
        }
        out
    }
}

/// One Hénon factor `(z, w) ↦ (w, P(w) + a z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HenonFactor {
    coeffs: Vec<Complex64>,
    a: Complex64,
}

impl HenonFactor {
    /// Build a factor from ascending polynomial coefficients and the constant
    /// `a`. Rejects degree < 2 (including a vanishing leading coefficient)
    /// and `a = 0`.
    pub fn new(coeffs: Vec<Complex64>, a: Complex64) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(Error::Config(format!(
                "factor polynomial must have degree >= 2 (got {} coefficients)",
                coeffs.len()
            )));
        }
        let lead = coeffs.last().expect("len checked");
        if lead.norm() == 0.0 {
            return Err(Error::Config(
                "factor polynomial leading coefficient must be nonzero (degree >= 2)".into(),
            ));
        }
        if a.norm() == 0.0 {
            return Err(Error::Config("factor constant a must be nonzero".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Config("factor coefficients must be finite".into()));
        }
        Ok(Self { coeffs, a })
    }

    /// Convenience constructor for the single-family workhorse `P(w) = w² + c`.
    pub fn quadratic(c: Complex64, a: Complex64) -> Result<Self> {
        Self::new(
            vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            a,
        )
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `P(w)`.
    pub fn poly(&self, w: Complex64) -> Complex64 {
        poly_eval(&self.coeffs, w)
    }

    /// `(P(w), P'(w))`.
    pub fn poly_with_deriv(&self, w: Complex64) -> (Complex64, Complex64) {
        poly_eval_with_deriv(&self.coeffs, w)
    }

    /// The `deg P` solutions of `P(w) = v`, sorted by (re, im). This fixed
    /// ordering is what indexes inverse branches during seeding.
    pub fn preimages(&self, v: Complex64) -> Option<Vec<Complex64>> {
        let mut shifted = self.coeffs.clone();
        shifted[0] -= v;
        let roots = poly_roots(&shifted)?;
        (roots.len() == self.degree()).then_some(roots)
    }

    /// Forward action of the factor with `a` replaced by `scale * a`
    /// (continuation use; `scale = 1` is the factor itself).
    pub(crate) fn apply_scaled(&self, p: Complex2, scale: f64) -> Complex2 {
        Complex2::new(p.w, self.poly(p.w) + scale * self.a * p.z)
    }

    /// Factor Jacobian at a point with `w`-coordinate `w`:
    /// rows ((0, 1), (a, P'(w))).
    pub(crate) fn jacobian_scaled(&self, w: Complex64, scale: f64) -> Jacobian2 {
        let (_, dp) = self.poly_with_deriv(w);
        Jacobian2 {
            m: [
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
                [scale * self.a, dp],
            ],
        }
    }
}

/// Volume behaviour of the composed map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeClass {
    /// `|a| < 1`.
    Decreasing,
    /// `|a| = 1` (within [`VOLUME_PRESERVING_TOL`]).
    Preserving,
}

impl std::fmt::Display for VolumeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VolumeClass::Decreasing => write!(f, "volume-decreasing"),
            VolumeClass::Preserving => write!(f, "volume-preserving"),
        }
    }
}

/// Static character of a map: composed degree, `|a|`, and volume class.
#[derive(Clone, Copy, Debug)]
pub struct MapCharacter {
    pub degree: u64,
    pub jac_mod: f64,
    pub volume_class: VolumeClass,
}

/// A finite composition of Hénon factors, applied in list order.
#[derive(Clone, Debug)]
pub struct HenonMap {
    factors: Vec<HenonFactor>,
    degree: u64,
    jac_det: Complex64,
    jac_mod: f64,
    volume_class: VolumeClass,
}

impl HenonMap {
    /// Compose validated factors. Fails with `orientation` when `|a| > 1`.
    pub fn new(factors: Vec<HenonFactor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Config("map needs at least one factor".into()));
        }
        let mut degree: u64 = 1;
        let mut jac_det = Complex64::new(1.0, 0.0);
        for f in &factors {
            degree = degree
                .checked_mul(f.degree() as u64)
                .ok_or_else(|| Error::Config("composed degree overflows".into()))?;
            jac_det *= -f.a;
        }
        let jac_mod = factors.iter().map(|f| f.a.norm()).product::<f64>();
        let volume_class = if (jac_mod - 1.0).abs() <= VOLUME_PRESERVING_TOL {
            VolumeClass::Preserving
        } else if jac_mod < 1.0 {
            VolumeClass::Decreasing
        } else {
            return Err(Error::Orientation { jac_mod });
        };
        Ok(Self {
            factors,
            degree,
            jac_det,
            jac_mod,
            volume_class,
        })
    }

    /// Single-factor convenience: `P(w) = w² + c`.
    pub fn quadratic(c: Complex64, a: Complex64) -> Result<Self> {
        Self::new(vec![HenonFactor::quadratic(c, a)?])
    }

    pub fn factors(&self) -> &[HenonFactor] {
        &self.factors
    }

    /// Composed algebraic degree `Π deg P_i`.
    pub fn degree(&self) -> u64 {
        self.degree
    }

    /// Constant Jacobian determinant `(−1)^m Π a_i`.
    pub fn jac_det(&self) -> Complex64 {
        self.jac_det
    }

    /// `|a| = Π |a_i|` — the only part of `a` the dimension theory sees.
    pub fn jac_mod(&self) -> f64 {
        self.jac_mod
    }

    /// `log |a|` (0 for volume-preserving maps, exactly).
    pub fn log_jac_mod(&self) -> f64 {
        match self.volume_class {
            VolumeClass::Preserving => 0.0,
            VolumeClass::Decreasing => self.jac_mod.ln(),
        }
    }

    pub fn volume_class(&self) -> VolumeClass {
        self.volume_class
    }

    /// Degree, `|a|`, and volume class in one bundle.
    pub fn characterize(&self) -> MapCharacter {
        MapCharacter {
            degree: self.degree,
            jac_mod: self.jac_mod,
            volume_class: self.volume_class,
        }
    }

    /// Apply the composition. Declares `escaped` as soon as any intermediate
    /// coordinate modulus exceeds [`ESCAPE_RADIUS`].
    pub fn eval(&self, p: Complex2) -> Result<Complex2> {
        let mut q = p;
        for f in &self.factors {
            q = f.apply_scaled(q, 1.0);
            if !q.is_finite() || q.max_norm() > ESCAPE_RADIUS {
                return Err(Error::Escaped {
                    threshold: ESCAPE_RADIUS,
                });
            }
        }
        Ok(q)
    }

    /// Apply the inverse composition (factor inverses in reverse order):
    /// `g_i⁻¹(z, w) = ((w − P_i(z)) / a_i, z)`.
    pub fn eval_inverse(&self, p: Complex2) -> Result<Complex2> {
        let mut q = p;
        for f in self.factors.iter().rev() {
            q = Complex2::new((q.w - f.poly(q.z)) / f.a, q.z);
            if !q.is_finite() || q.max_norm() > ESCAPE_RADIUS {
                return Err(Error::Escaped {
                    threshold: ESCAPE_RADIUS,
                });
            }
        }
        Ok(q)
    }

    /// Jacobian of the composition at `p`: the ordered product of factor
    /// Jacobians along the partial images. Also returns the image point.
    pub fn jacobian_at(&self, p: Complex2) -> Result<(Complex2, Jacobian2)> {
        let mut q = p;
        let mut jac = Jacobian2::identity();
        for f in &self.factors {
            jac = f.jacobian_scaled(q.w, 1.0).mul(&jac);
            q = f.apply_scaled(q, 1.0);
            if !q.is_finite() || q.max_norm() > ESCAPE_RADIUS {
                return Err(Error::Escaped {
                    threshold: ESCAPE_RADIUS,
                });
            }
        }
        Ok((q, jac))
    }

    /// Hash of the exact factor data; orbit caches are keyed by this.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"map");
        for f in &self.factors {
            hasher.update(b";factor:");
            for c in f.coeffs() {
                hasher.update(fmt_g17(c.re).as_bytes());
                hasher.update(b",");
                hasher.update(fmt_g17(c.im).as_bytes());
                hasher.update(b"|");
            }
            hasher.update(b"a=");
            hasher.update(fmt_g17(f.a.re).as_bytes());
            hasher.update(b",");
            hasher.update(fmt_g17(f.a.im).as_bytes());
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
