//! Structure tensors of the S-space form `R^{2n+s}(-3s)` in global coordinates.
//!
//! Coordinates are ordered `(x_1..x_n, y_1..y_n, z_1..z_s)`. With
//! `η^α = ½(dz_α − Σ y_i dx_i)` and `g = Σ η^α⊗η^α + ¼ Σ (dx_i² + dy_i²)` the
//! coordinate components of the metric are
//!
//! ```text
//! g_{x_i x_j} = ¼δ_ij + (s/4) y_i y_j     g_{y_i y_j} = ¼δ_ij
//! g_{x_i z_α} = −¼ y_i                    g_{z_α z_β} = ¼δ_αβ
//! ```
//!
//! and the inverse is `g⁻¹ = Σ X_a ⊗ X_a` over the orthonormal frame
//! `X_i = 2∂_{y_i}`, `X_{n+i} = 2(∂_{x_i} + y_i Σ ∂_{z_α})`, `ξ_α = 2∂_{z_α}`.
//!
//! All indices in this module are zero-based.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// The pair `(n, s)` fixing the model space of dimension `2n + s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSignature")]
pub struct SpaceSignature {
    n: usize,
    s: usize,
}

#[derive(Deserialize)]
struct RawSignature {
    n: usize,
    s: usize,
}

impl TryFrom<RawSignature> for SpaceSignature {
    type Error = Error;

    fn try_from(raw: RawSignature) -> Result<Self> {
        SpaceSignature::new(raw.n, raw.s)
    }
}

impl SpaceSignature {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(Error::invalid(format!(
                "signature requires n >= 1 and s >= 1, got n = {n}, s = {s}"
            )));
        }
        Ok(Self { n, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        2 * self.n + self.s
    }

    pub fn x(&self, i: usize) -> usize {
        i
    }

    pub fn y(&self, i: usize) -> usize {
        self.n + i
    }

    pub fn z(&self, alpha: usize) -> usize {
        2 * self.n + alpha
    }

    /// `1/√s`, the largest admissible `|cos θ|` of a slant curve.
    pub fn max_slant_cos(&self) -> f64 {
        1.0 / (self.s as f64).sqrt()
    }

    pub(crate) fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.dim() {
            return Err(Error::invalid(format!(
                "{what} has {len} components, signature (n = {}, s = {}) needs {}",
                self.n,
                self.s,
                self.dim()
            )));
        }
        Ok(())
    }
}

/// A point of `R^{2n+s}` in the coordinate order `(x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(DVector<f64>);

impl Point {
    pub fn new(sig: &SpaceSignature, coords: Vec<f64>) -> Result<Self> {
        sig.check_len(coords.len(), "point")?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point has non-finite coordinates"));
        }
        Ok(Self(DVector::from_vec(coords)))
    }

    pub fn origin(sig: &SpaceSignature) -> Self {
        Self(DVector::zeros(sig.dim()))
    }

    pub(crate) fn from_vector(v: DVector<f64>) -> Self {
        Self(v)
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        Ok(Self(DVector::from_vec(coords)))
    }
}

/// A tangent vector in the coordinate basis `∂_{x_i}, ∂_{y_i}, ∂_{z_α}`,
/// attached to its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    base: Point,
    comps: DVector<f64>,
}

impl Tangent {
    pub fn new(base: Point, comps: Vec<f64>) -> Result<Self> {
        if comps.len() != base.len() {
            return Err(Error::invalid(format!(
                "tangent has {} components but its base point has {}",
                comps.len(),
                base.len()
            )));
        }
        if comps.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("tangent has non-finite components"));
        }
        Ok(Self {
            base,
            comps: DVector::from_vec(comps),
        })
    }

    pub fn zero(base: Point) -> Self {
        let comps = DVector::zeros(base.len());
        Self { base, comps }
    }

    pub(crate) fn from_parts(base: Point, comps: DVector<f64>) -> Self {
        debug_assert_eq!(base.len(), comps.len());
        Self { base, comps }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn comps(&self) -> &DVector<f64> {
        &self.comps
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_parts(self.base.clone(), &self.comps * factor)
    }

    /// `self + factor · other`; both must share a base point.
    pub fn add_scaled(&self, factor: f64, other: &Tangent) -> Result<Self> {
        same_base(self, other)?;
        Ok(Self::from_parts(
            self.base.clone(),
            &self.comps + &other.comps * factor,
        ))
    }
}

impl Serialize for Tangent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.comps.as_slice().serialize(serializer)
    }
}

fn same_base(a: &Tangent, b: &Tangent) -> Result<()> {
    if a.base != b.base {
        return Err(Error::invalid("tangent vectors are attached to different points"));
    }
    Ok(())
}

/// Coordinate matrix of `g` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricComponents {
    pub entries: DMatrix<f64>,
}

impl MetricComponents {
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let m = &self.entries;
        (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
    }

    pub fn is_positive_definite(&self) -> bool {
        self.entries.clone().cholesky().is_some()
    }
}

/// Christoffel symbols `Γ^k_{ij}` of the Levi-Civita connection at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelTensor {
    dim: usize,
    gamma: Vec<f64>,
}

impl ChristoffelTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.dim + i) * self.dim + j]
    }

    /// `Γ^k_{ij} a^i b^j`.
    pub fn contract(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |k, _| {
            let mut acc = 0.0;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    acc += self.get(k, i, j) * a[i] * b[j];
                }
            }
            acc
        })
    }
}

/// The model space `R^{2n+s}(−3s)` with its S-structure `(φ, ξ_α, η^α, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpace {
    sig: SpaceSignature,
}

impl ModelSpace {
    pub fn new(sig: SpaceSignature) -> Self {
        Self { sig }
    }

    pub fn signature(&self) -> &SpaceSignature {
        &self.sig
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        self.sig.check_len(p.len(), "point")
    }

    fn check_tangent(&self, v: &Tangent) -> Result<()> {
        self.sig.check_len(v.comps.len(), "tangent")?;
        self.check_point(&v.base)
    }

    /// `Σ_i y_i v_{x_i}` at `p`.
    fn y_dot_x(&self, p: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (0..self.sig.n).map(|i| p[self.sig.y(i)] * v[self.sig.x(i)]).sum()
    }

    /// `η^α(v)` for every α.
    pub fn eta_at(&self, p: &DVector<f64>, v: &DVector<f64>) -> Vec<f64> {
        let yx = self.y_dot_x(p, v);
        (0..self.sig.s)
            .map(|a| 0.5 * (v[self.sig.z(a)] - yx))
            .collect()
    }

    pub fn eta(&self, v: &Tangent) -> Result<Vec<f64>> {
        self.check_tangent(v)?;
        Ok(self.eta_at(v.base.coords(), &v.comps))
    }

    pub fn metric_at(&self, p: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let sig = &self.sig;
        let eta_a = self.eta_at(p, a);
        let eta_b = self.eta_at(p, b);
        let contact: f64 = (0..2 * sig.n).map(|i| a[i] * b[i]).sum();
        let vertical: f64 = eta_a.iter().zip(&eta_b).map(|(u, v)| u * v).sum();
        vertical + 0.25 * contact
    }

    pub fn metric(&self, a: &Tangent, b: &Tangent) -> Result<f64> {
        self.check_tangent(a)?;
        self.check_tangent(b)?;
        same_base(a, b)?;
        Ok(self.metric_at(a.base.coords(), &a.comps, &b.comps))
    }

    pub fn norm_at(&self, p: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.metric_at(p, v, v).max(0.0).sqrt()
    }

    pub fn norm(&self, v: &Tangent) -> Result<f64> {
        self.check_tangent(v)?;
        Ok(self.norm_at(v.base.coords(), &v.comps))
    }

    pub fn metric_matrix(&self, p: &Point) -> Result<MetricComponents> {
        self.check_point(p)?;
        let sig = &self.sig;
        let y = |i: usize| p.coords()[sig.y(i)];
        let s = sig.s as f64;
        let mut m = DMatrix::zeros(sig.dim(), sig.dim());
        for i in 0..sig.n {
            for j in 0..sig.n {
                let delta = if i == j { 0.25 } else { 0.0 };
                m[(sig.x(i), sig.x(j))] = delta + 0.25 * s * (y(i) * y(j));
            }
            m[(sig.y(i), sig.y(i))] = 0.25;
            for a in 0..sig.s {
                m[(sig.x(i), sig.z(a))] = -0.25 * y(i);
                m[(sig.z(a), sig.x(i))] = -0.25 * y(i);
            }
        }
        for a in 0..sig.s {
            m[(sig.z(a), sig.z(a))] = 0.25;
        }
        Ok(MetricComponents { entries: m })
    }

    /// Closed-form `g^{kl}`.
    pub fn inverse_metric(&self, p: &Point) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        let sig = &self.sig;
        let y = |i: usize| p.coords()[sig.y(i)];
        let y2: f64 = (0..sig.n).map(|i| y(i) * y(i)).sum();
        let mut m = DMatrix::zeros(sig.dim(), sig.dim());
        for i in 0..sig.n {
            m[(sig.x(i), sig.x(i))] = 4.0;
            m[(sig.y(i), sig.y(i))] = 4.0;
            for a in 0..sig.s {
                m[(sig.x(i), sig.z(a))] = 4.0 * y(i);
                m[(sig.z(a), sig.x(i))] = 4.0 * y(i);
            }
        }
        for a in 0..sig.s {
            for b in 0..sig.s {
                m[(sig.z(a), sig.z(b))] = 4.0 * y2 + if a == b { 4.0 } else { 0.0 };
            }
        }
        Ok(m)
    }

    /// Exact partial derivatives `∂_l g_{ij}`, indexed `[l][(i, j)]`. Only the
    /// `y` directions are nonzero.
    pub fn metric_partials(&self, p: &Point) -> Result<Vec<DMatrix<f64>>> {
        self.check_point(p)?;
        let sig = &self.sig;
        let s = sig.s as f64;
        let y = |i: usize| p.coords()[sig.y(i)];
        let dim = sig.dim();
        let mut partials = vec![DMatrix::zeros(dim, dim); dim];
        for k in 0..sig.n {
            let d = &mut partials[sig.y(k)];
            for i in 0..sig.n {
                for j in 0..sig.n {
                    let mut v = 0.0;
                    if i == k {
                        v += y(j);
                    }
                    if j == k {
                        v += y(i);
                    }
                    d[(sig.x(i), sig.x(j))] = 0.25 * s * v;
                }
            }
            for a in 0..sig.s {
                d[(sig.x(k), sig.z(a))] = -0.25;
                d[(sig.z(a), sig.x(k))] = -0.25;
            }
        }
        Ok(partials)
    }

    /// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})` from the
    /// closed-form metric derivatives.
    pub fn christoffel(&self, p: &Point) -> Result<ChristoffelTensor> {
        let dim = self.sig.dim();
        let dg = self.metric_partials(p)?;
        let ginv = self.inverse_metric(p)?;
        let mut first = vec![0.0; dim * dim * dim];
        for l in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    first[(l * dim + i) * dim + j] =
                        0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
            }
        }
        let mut gamma = vec![0.0; dim * dim * dim];
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    gamma[(k * dim + i) * dim + j] = (0..dim)
                        .map(|l| ginv[(k, l)] * first[(l * dim + i) * dim + j])
                        .sum();
                }
            }
        }
        Ok(ChristoffelTensor { dim, gamma })
    }

    /// `Γ^k_{ij}(p) a^i b^j` in closed form, without building the tensor.
    ///
    /// Lowered first: with `E_v = Σ_α η^α(v)` and `m = w_a·u_b + w_b·u_a`
    /// (`u`, `w` the x- and y-blocks),
    /// `L_{x_i} = −¼(w_{a,i} E_b + w_{b,i} E_a) + (s/8) y_i m`,
    /// `L_{y_i} = ¼(u_{a,i} E_b + u_{b,i} E_a)`, `L_{z_α} = −m/8`; then raised
    /// with the closed-form inverse metric.
    pub fn connection_at(&self, p: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let sig = &self.sig;
        let (n, s) = (sig.n, sig.s);
        let sf = s as f64;
        let y = |i: usize| p[sig.y(i)];
        let e_a: f64 = self.eta_at(p, a).iter().sum();
        let e_b: f64 = self.eta_at(p, b).iter().sum();
        let m: f64 = (0..n)
            .map(|i| a[sig.y(i)] * b[sig.x(i)] + b[sig.y(i)] * a[sig.x(i)])
            .sum();
        let l_z = -m / 8.0;
        let l_z_sum = sf * l_z;
        let y2: f64 = (0..n).map(|i| y(i) * y(i)).sum();

        let mut out = DVector::zeros(sig.dim());
        let mut y_dot_lx = 0.0;
        for i in 0..n {
            let l_x = -0.25 * (a[sig.y(i)] * e_b + b[sig.y(i)] * e_a) + sf / 8.0 * y(i) * m;
            let l_y = 0.25 * (a[sig.x(i)] * e_b + b[sig.x(i)] * e_a);
            y_dot_lx += y(i) * l_x;
            out[sig.x(i)] = 4.0 * l_x + 4.0 * y(i) * l_z_sum;
            out[sig.y(i)] = 4.0 * l_y;
        }
        for alpha in 0..s {
            out[sig.z(alpha)] = 4.0 * y_dot_lx + 4.0 * y2 * l_z_sum + 4.0 * l_z;
        }
        out
    }

    pub fn phi_at(&self, p: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let sig = &self.sig;
        let mut out = DVector::zeros(sig.dim());
        let mut vertical = 0.0;
        for i in 0..sig.n {
            out[sig.x(i)] = v[sig.y(i)];
            out[sig.y(i)] = -v[sig.x(i)];
            vertical += v[sig.y(i)] * p[sig.y(i)];
        }
        for a in 0..sig.s {
            out[sig.z(a)] = vertical;
        }
        out
    }

    pub fn phi(&self, v: &Tangent) -> Result<Tangent> {
        self.check_tangent(v)?;
        Ok(Tangent::from_parts(
            v.base.clone(),
            self.phi_at(v.base.coords(), &v.comps),
        ))
    }

    /// Coordinate components of `ξ_α = 2∂_{z_α}` (the same at every point).
    pub fn xi_components(&self, alpha: usize) -> Result<DVector<f64>> {
        if alpha >= self.sig.s {
            return Err(Error::invalid(format!(
                "Reeb index {alpha} out of range for s = {}",
                self.sig.s
            )));
        }
        let mut v = DVector::zeros(self.sig.dim());
        v[self.sig.z(alpha)] = 2.0;
        Ok(v)
    }

    pub fn xi(&self, p: &Point, alpha: usize) -> Result<Tangent> {
        self.check_point(p)?;
        Ok(Tangent::from_parts(p.clone(), self.xi_components(alpha)?))
    }

    /// `Σ_α ξ_α`.
    pub fn reeb_sum_components(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.sig.dim());
        for a in 0..self.sig.s {
            v[self.sig.z(a)] = 2.0;
        }
        v
    }

    /// Coordinate components of the orthonormal frame
    /// `(X_1..X_n, X_{n+1}..X_{2n}, ξ_1..ξ_s)` at `p`.
    pub fn frame_at(&self, p: &DVector<f64>) -> Vec<DVector<f64>> {
        let sig = &self.sig;
        let mut frame = Vec::with_capacity(sig.dim());
        for i in 0..sig.n {
            let mut v = DVector::zeros(sig.dim());
            v[sig.y(i)] = 2.0;
            frame.push(v);
        }
        for i in 0..sig.n {
            let mut v = DVector::zeros(sig.dim());
            v[sig.x(i)] = 2.0;
            for a in 0..sig.s {
                v[sig.z(a)] = 2.0 * p[sig.y(i)];
            }
            frame.push(v);
        }
        for a in 0..sig.s {
            let mut v = DVector::zeros(sig.dim());
            v[sig.z(a)] = 2.0;
            frame.push(v);
        }
        frame
    }

    pub fn orthonormal_frame(&self, p: &Point) -> Result<Vec<Tangent>> {
        self.check_point(p)?;
        Ok(self
            .frame_at(p.coords())
            .into_iter()
            .map(|v| Tangent::from_parts(p.clone(), v))
            .collect())
    }

    /// Directional derivative along `dir` of the coordinate coefficients of
    /// frame field `index`. Only `X_{n+i}` depends on the point.
    pub fn frame_derivative(&self, index: usize, dir: &DVector<f64>) -> DVector<f64> {
        let sig = &self.sig;
        let mut d = DVector::zeros(sig.dim());
        if (sig.n..2 * sig.n).contains(&index) {
            let i = index - sig.n;
            for a in 0..sig.s {
                d[sig.z(a)] = 2.0 * dir[sig.y(i)];
            }
        }
        d
    }

    /// `∇_{E_a} E_b` for frame fields `E_a`, `E_b`, in coordinates.
    pub fn frame_connection(&self, p: &Point, a: usize, b: usize) -> Result<Tangent> {
        self.check_point(p)?;
        let dim = self.sig.dim();
        if a >= dim || b >= dim {
            return Err(Error::invalid(format!("frame index out of range for dimension {dim}")));
        }
        let frame = self.frame_at(p.coords());
        let comps = self.frame_derivative(b, &frame[a])
            + self.connection_at(p.coords(), &frame[a], &frame[b]);
        Ok(Tangent::from_parts(p.clone(), comps))
    }

    /// `a^k + Γ^k_{ij} v^i v^j`, the covariant acceleration of a curve with
    /// velocity `v` and coordinate acceleration `a`.
    pub fn covariant_acceleration(&self, v: &Tangent, a: &Tangent) -> Result<Tangent> {
        self.check_tangent(v)?;
        self.check_tangent(a)?;
        same_base(v, a)?;
        let p = v.base.coords();
        Ok(Tangent::from_parts(
            v.base.clone(),
            &a.comps + self.connection_at(p, &v.comps, &v.comps),
        ))
    }

    /// Both sides of `(∇_X φ)Y = Σ_α { g(φX, φY) ξ_α + η^α(Y) φ²X }`.
    ///
    /// The left side extends `X`, `Y` as constant-coefficient fields; the
    /// derivative of the coefficients of `φY` is taken by central differences
    /// with step `1e-6`.
    pub fn nabla_phi_check(&self, x: &Tangent, y: &Tangent) -> Result<(Tangent, Tangent)> {
        self.check_tangent(x)?;
        self.check_tangent(y)?;
        same_base(x, y)?;
        const H: f64 = 1e-6;
        let p = x.base.coords();
        let (xv, yv) = (&x.comps, &y.comps);

        let forward = p + xv * H;
        let backward = p - xv * H;
        let d_phi_y = (self.phi_at(&forward, yv) - self.phi_at(&backward, yv)) / (2.0 * H);
        let phi_y = self.phi_at(p, yv);
        let nabla_phi_y = d_phi_y + self.connection_at(p, xv, &phi_y);
        let nabla_y = self.connection_at(p, xv, yv);
        let lhs = nabla_phi_y - self.phi_at(p, &nabla_y);

        let phi_x = self.phi_at(p, xv);
        let g_phi = self.metric_at(p, &phi_x, &phi_y);
        let eta_sum: f64 = self.eta_at(p, yv).iter().sum();
        let rhs = self.reeb_sum_components() * g_phi + self.phi_at(p, &phi_x) * eta_sum;

        Ok((
            Tangent::from_parts(x.base.clone(), lhs),
            Tangent::from_parts(x.base.clone(), rhs),
        ))
    }
}
