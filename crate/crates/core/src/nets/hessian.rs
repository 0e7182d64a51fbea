use super::data::Dataset;
use super::net::FeedforwardNet;
use crate::error::{Error, Result};
use crate::operators::{check_dims, DenseSymmetric, SymmetricOperator};
use crate::scalar::norm;
use crate::Scalar;

/// A smooth function known through its gradient, expanded around `params()`.
pub trait Objective<T: Scalar>: Sync {
    fn params(&self) -> &[T];
    fn gradient_at(&self, w: &[T]) -> Result<Vec<T>>;

    /// Hessian-vector product at `params()`. Defaults to central differences.
    fn hessian_vector(&self, v: &[T]) -> Result<Vec<T>> {
        hvp_central_difference(self, v)
    }
}

/// Mean cross-entropy of a network over a fixed batch.
pub struct NetObjective<'a, T> {
    net: FeedforwardNet<T>,
    w0: Vec<T>,
    batch: &'a Dataset<T>,
}

impl<'a, T: Scalar> NetObjective<'a, T> {
    pub fn new(net: &FeedforwardNet<T>, batch: &'a Dataset<T>) -> Self {
        Self { net: net.clone(), w0: net.flatten(), batch }
    }
}

impl<T: Scalar> Objective<T> for NetObjective<'_, T> {
    fn params(&self) -> &[T] {
        &self.w0
    }
    fn gradient_at(&self, w: &[T]) -> Result<Vec<T>> {
        let mut net = self.net.clone();
        net.set_flat(w)?;
        net.grad(self.batch)
    }
    /// Exact product (forward-over-reverse); ReLU kinks contribute nothing.
    fn hessian_vector(&self, v: &[T]) -> Result<Vec<T>> {
        self.net.hvp_exact(self.batch, v)
    }
}

/// `½ wᵀAw`, whose Hessian is exactly `A`. Used to test the Hessian machinery.
pub struct QuadraticObjective<T> {
    a: DenseSymmetric<T>,
    w0: Vec<T>,
}

impl<T: Scalar> QuadraticObjective<T> {
    pub fn new(a: DenseSymmetric<T>, w0: Vec<T>) -> Result<Self> {
        if w0.len() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: w0.len() });
        }
        Ok(Self { a, w0 })
    }
}

impl<T: Scalar> Objective<T> for QuadraticObjective<T> {
    fn params(&self) -> &[T] {
        &self.w0
    }
    fn gradient_at(&self, w: &[T]) -> Result<Vec<T>> {
        let mut g = vec![T::zero(); w.len()];
        self.a.matvec(w, &mut g)?;
        Ok(g)
    }
}

/// Hessian-vector product of `obj` at its expansion point.
pub fn hvp<T: Scalar, O: Objective<T> + ?Sized>(obj: &O, v: &[T]) -> Result<Vec<T>> {
    let w = obj.params();
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: v.len() });
    }
    let out = obj.hessian_vector(v)?;
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("hvp"));
    }
    Ok(out)
}

/// Central differences of the gradient:
/// `(∇f(w + hv) − ∇f(w − hv)) / 2h` with `h = 1e-4·max(1, ‖w‖)/max(1e-12, ‖v‖)`.
pub fn hvp_central_difference<T: Scalar, O: Objective<T> + ?Sized>(obj: &O, v: &[T]) -> Result<Vec<T>> {
    let w = obj.params();
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: v.len() });
    }
    let vn = norm(v);
    if !vn.is_finite() {
        return Err(Error::NonFinite("hvp direction"));
    }
    if vn == T::zero() {
        return Ok(vec![T::zero(); w.len()]);
    }
    let h = T::of(1e-4) * norm(w).max(T::one()) / vn.max(T::of(1e-12));
    let plus: Vec<T> = w.iter().zip(v).map(|(&a, &b)| a + h * b).collect();
    let minus: Vec<T> = w.iter().zip(v).map(|(&a, &b)| a - h * b).collect();
    let gp = obj.gradient_at(&plus)?;
    let gm = obj.gradient_at(&minus)?;
    let inv = T::one() / (T::of(2.0) * h);
    let out: Vec<T> = gp.iter().zip(&gm).map(|(&a, &b)| (a - b) * inv).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("hvp"));
    }
    Ok(out)
}

/// The Hessian of an objective as a matrix-free operator.
pub struct HessianOperator<'a, O: ?Sized> {
    obj: &'a O,
}

impl<'a, O: ?Sized> HessianOperator<'a, O> {
    pub fn new(obj: &'a O) -> Self {
        Self { obj }
    }
}

impl<T: Scalar, O: Objective<T> + ?Sized> SymmetricOperator<T> for HessianOperator<'_, O> {
    fn dim(&self) -> usize {
        self.obj.params().len()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) -> Result<()> {
        check_dims(self.dim(), x.len(), y.len())?;
        y.copy_from_slice(&hvp(self.obj, x)?);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HessianReport<T> {
    pub hessian: DenseSymmetric<T>,
    /// `‖(M − Mᵀ)/2‖_F` of the raw column matrix.
    pub residual: T,
    /// `‖M‖_F` of the raw column matrix.
    pub raw_norm: T,
}

/// Largest dimension `exact_hessian` accepts.
pub const EXACT_HESSIAN_LIMIT: usize = 3000;

/// Assembles the Hessian column by column from `hvp(eᵢ)`, then symmetrizes.
pub fn exact_hessian<T: Scalar, O: Objective<T> + ?Sized>(obj: &O) -> Result<HessianReport<T>> {
    let n = obj.params().len();
    if n > EXACT_HESSIAN_LIMIT {
        return Err(Error::InvalidArgument(format!("exact hessian limited to D <= {EXACT_HESSIAN_LIMIT}, got {n}")));
    }
    let mut cols = vec![T::zero(); n * n];
    let mut e = vec![T::zero(); n];
    for i in 0..n {
        e[i] = T::one();
        let col = hvp(obj, &e)?;
        e[i] = T::zero();
        for (r, &v) in col.iter().enumerate() {
            cols[r * n + i] = v;
        }
    }
    let mut skew = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (cols[i * n + j] - cols[j * n + i]) * T::of(0.5);
            skew += T::of(2.0) * d * d;
        }
    }
    let residual = skew.sqrt();
    let raw_norm = norm(&cols);
    let limit = T::of(1e-3) * raw_norm;
    if residual > limit {
        return Err(Error::AsymmetricHessian { residual: residual.to_f64_lossy(), limit: limit.to_f64_lossy() });
    }
    Ok(HessianReport { hessian: DenseSymmetric::from_row_major(n, cols)?, residual, raw_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_vec, rng};

    fn random_quadratic(n: usize, seed: u64) -> QuadraticObjective<f64> {
        let mut r = rng(seed);
        let a = DenseSymmetric::from_row_major(n, normal_vec(&mut r, n * n)).unwrap();
        QuadraticObjective::new(a, normal_vec(&mut r, n)).unwrap()
    }

    #[test]
    fn quadratic_hvp_is_exact() {
        let q = random_quadratic(12, 1);
        let mut r = rng(2);
        let v: Vec<f64> = normal_vec(&mut r, 12);
        let got = hvp(&q, &v).unwrap();
        let mut want = vec![0.0; 12];
        q.a.matvec(&v, &mut want).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-6, "{g} vs {w}");
        }
    }

    #[test]
    fn quadratic_exact_hessian_recovers_matrix() {
        let q = random_quadratic(8, 3);
        let rep = exact_hessian(&q).unwrap();
        for (a, b) in rep.hessian.entries().iter().zip(q.a.entries()) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!(rep.residual < 1e-7);
    }

    #[test]
    fn zero_direction_gives_zero() {
        let q = random_quadratic(4, 5);
        assert_eq!(hvp(&q, &[0.0; 4]).unwrap(), vec![0.0; 4]);
        assert!(hvp(&q, &[0.0; 3]).is_err());
    }

    #[test]
    fn net_hvp_matches_central_difference() {
        use crate::nets::{Dataset, FeedforwardNet, Split};
        let net = FeedforwardNet::<f64>::init_kaiming(&[3, 4, 2], 7).unwrap();
        let mut r = rng(9);
        let data = Dataset::new(normal_vec(&mut r, 30), (0..10).map(|i| i % 2).collect(), 3, 2, Split::Train).unwrap();
        let obj = NetObjective::new(&net, &data);
        let n = net.num_params();
        let mut r = rng(11);
        for _ in 0..5 {
            let v = normal_vec(&mut r, n);
            let exact = hvp(&obj, &v).unwrap();
            let fd = hvp_central_difference(&obj, &v).unwrap();
            let scale = exact.iter().map(|x| x.abs()).fold(1e-3, f64::max);
            for (a, b) in exact.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-4 * scale, "{a} vs {b}");
            }
        }
        let rep = exact_hessian(&obj).unwrap();
        assert!(rep.residual < 1e-10 * rep.raw_norm.max(1.0));
    }
}
