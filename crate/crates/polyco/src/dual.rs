//! Forward-mode dual numbers.
//!
//! `Dual` carries a value together with one directional derivative, so a
//! closure written over `Dual` arguments yields exact first derivatives of
//! arbitrary compositions of the whitelisted primitives (arithmetic, `sin`,
//! `cos`, `exp`, `recip`, powers). Jacobians are assembled column by column
//! by seeding one input direction per pass.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    /// Value part.
    pub re: f64,
    /// Derivative part along the seeded direction.
    pub du: f64,
}

impl Dual {
    pub const ZERO: Dual = Dual { re: 0.0, du: 0.0 };

    #[inline]
    pub fn constant(re: f64) -> Self {
        Dual { re, du: 0.0 }
    }

    #[inline]
    pub fn seeded(re: f64, du: f64) -> Self {
        Dual { re, du }
    }

    #[inline]
    pub fn sin(self) -> Self {
        Dual { re: self.re.sin(), du: self.du * self.re.cos() }
    }

    #[inline]
    pub fn cos(self) -> Self {
        Dual { re: self.re.cos(), du: -self.du * self.re.sin() }
    }

    #[inline]
    pub fn exp(self) -> Self {
        let e = self.re.exp();
        Dual { re: e, du: self.du * e }
    }

    /// 1/x. The chart data is responsible for keeping arguments away from 0
    /// (e.g. the membrane annulus excludes r = 0).
    #[inline]
    pub fn recip(self) -> Self {
        let inv = 1.0 / self.re;
        Dual { re: inv, du: -self.du * inv * inv }
    }

    #[inline]
    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual::constant(1.0);
        }
        Dual {
            re: self.re.powi(n),
            du: self.du * f64::from(n) * self.re.powi(n - 1),
        }
    }

    #[inline]
    pub fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual { re: s, du: self.du * 0.5 / s }
    }

    #[inline]
    pub fn abs_re(self) -> f64 {
        self.re.abs()
    }
}

impl From<f64> for Dual {
    fn from(re: f64) -> Self {
        Dual::constant(re)
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, rhs: Dual) -> Dual {
        Dual { re: self.re + rhs.re, du: self.du + rhs.du }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, rhs: Dual) -> Dual {
        Dual { re: self.re - rhs.re, du: self.du - rhs.du }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re * rhs.re,
            du: self.du * rhs.re + self.re * rhs.du,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)] // division via the exact reciprocal rule
    fn div(self, rhs: Dual) -> Dual {
        self * rhs.recip()
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual { re: -self.re, du: -self.du }
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, rhs: f64) -> Dual {
        Dual { re: self.re + rhs, du: self.du }
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, rhs: f64) -> Dual {
        Dual { re: self.re - rhs, du: self.du }
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: f64) -> Dual {
        Dual { re: self.re * rhs, du: self.du * rhs }
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: Dual) -> Dual {
        rhs * self
    }
}

/// Solve `a x = b` by LU with partial pivoting over dual scalars. Pivoting
/// compares value parts only, so the factorization follows the same pivot
/// sequence as the underlying real solve and the derivative parts propagate
/// exactly. Returns `None` when a pivot degenerates.
pub fn lu_solve_dual(a: &mut [Vec<Dual>], b: &mut [Dual]) -> Option<Vec<Dual>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col][col].abs_re();
        for (row, row_data) in a.iter().enumerate().skip(col + 1) {
            let mag = row_data[col].abs_re();
            if mag > best {
                best = mag;
                piv = row;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if piv != col {
            a.swap(col, piv);
            b.swap(col, piv);
        }
        let inv = a[col][col].recip();
        for row in col + 1..n {
            let factor = a[row][col] * inv;
            for j in col..n {
                let sub = factor * a[col][j];
                a[row][j] = a[row][j] - sub;
            }
            let sub = factor * b[col];
            b[row] = b[row] - sub;
        }
    }
    let mut x = vec![Dual::ZERO; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in row + 1..n {
            acc = acc - a[row][j] * x[j];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
