/// Dimension of `P_{k-1}` on `R^n`: `binomial(n + k - 1, n)`, and 0 for `k = 0`.
pub fn basis_size(n: usize, k: usize) -> usize {
    if k == 0 {
        return 0;
    }
    // binomial(n + k - 1, n) computed as a running product
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc * (k as u128 - 1 + i) / i;
    }
    acc as usize
}

/// Multi-indices `beta` with `|beta| <= k - 1`, graded then lexicographic
/// (descending in the first coordinate within a degree).
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(basis_size(n, k));
    for degree in 0..k as u32 {
        let mut current = vec![0u32; n];
        push_compositions(degree, 0, &mut current, &mut out);
    }
    out
}

fn push_compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        push_compositions(remaining - e, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// Affine chart `y = (x - center) / scale` in which coefficients are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl Frame {
    pub fn identity(n: usize) -> Self {
        Self { center: vec![0.0; n], scale: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Writes the monomials `y^beta` for all `beta` in `indices` into `out`.
    pub fn monomials_into(&self, x: &[f64], k: usize, indices: &[Vec<u32>], out: &mut [f64]) {
        let n = self.dim();
        // powers[d * k + e] = y_d^e
        let mut powers = vec![1.0; n * k.max(1)];
        for d in 0..n {
            let y = (x[d] - self.center[d]) / self.scale;
            for e in 1..k {
                powers[d * k + e] = powers[d * k + e - 1] * y;
            }
        }
        for (slot, beta) in out.iter_mut().zip(indices) {
            *slot = beta
                .iter()
                .enumerate()
                .map(|(d, &e)| powers[d * k + e as usize])
                .product();
        }
    }

    pub fn monomials(&self, x: &[f64], k: usize, indices: &[Vec<u32>]) -> Vec<f64> {
        let mut out = vec![0.0; indices.len()];
        self.monomials_into(x, k, indices, &mut out);
        out
    }
}

/// Element of `P_{k-1}` (degree at most `k - 1`; `k = 0` is the zero space).
///
/// Coefficients refer to the monomials of [`multi_indices`] evaluated in the
/// polynomial's [`Frame`].
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    k: usize,
    frame: Frame,
    indices: Vec<Vec<u32>>,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zero(frame: Frame, k: usize) -> Self {
        let indices = multi_indices(frame.dim(), k);
        let coeffs = vec![0.0; indices.len()];
        Self { k, frame, indices, coeffs }
    }

    pub fn from_coeffs(frame: Frame, k: usize, coeffs: Vec<f64>) -> Self {
        let indices = multi_indices(frame.dim(), k);
        assert_eq!(indices.len(), coeffs.len(), "coefficient count must match basis size");
        Self { k, frame, indices, coeffs }
    }

    /// Constant polynomial `value` in `P_{k-1}`, `k >= 1`.
    pub fn constant(frame: Frame, k: usize, value: f64) -> Self {
        let mut p = Self::zero(frame, k);
        if let Some(c) = p.coeffs.first_mut() {
            *c = value;
        }
        p
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.dim()
    }

    /// The `k` of `P_{k-1}`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// `None` for the zero space `P_{-1}`.
    pub fn max_degree(&self) -> Option<usize> {
        self.k.checked_sub(1)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn multi_indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, beta: &[u32]) -> Option<f64> {
        self.indices.iter().position(|b| b == beta).map(|i| self.coeffs[i])
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.k == 0 {
            return 0.0;
        }
        let mono = self.frame.monomials(x, self.k, &self.indices);
        mono.iter().zip(&self.coeffs).map(|(m, c)| m * c).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        let mut p = self.clone();
        p.coeffs.iter_mut().for_each(|c| *c *= lambda);
        p
    }

    /// `a * self + b * other`; both must share frame and space.
    pub fn combine(&self, a: f64, other: &Polynomial, b: f64) -> Self {
        assert_eq!(self.frame, other.frame, "polynomials live in different frames");
        assert_eq!(self.k, other.k, "polynomials live in different spaces");
        let mut p = self.clone();
        for (c, o) in p.coeffs.iter_mut().zip(&other.coeffs) {
            *c = a * *c + b * o;
        }
        p
    }
}
