use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

#[allow(clippy::needless_range_loop)]
fn det(mut a: Vec<Vec<BigRational>>) -> BigRational {
    let n = a.len();
    let mut d = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c].clone();
        for r in c + 1..n {
            let f = a[r][c].clone() / a[c][c].clone();
            for k in c..n {
                let v = a[c][k].clone() * f.clone();
                a[r][k] -= v;
            }
        }
    }
    d
}

/// `P(U_(1) <= t₁, …, U_(n) <= t_n)` as `n! det[t_i^{j-i+1} / (j-i+1)!]`,
/// with zero entries below the subdiagonal, in exact arithmetic.
#[allow(clippy::needless_range_loop)]
pub fn steck_oracle(t: &[BigRational]) -> BigRational {
    let n = t.len();
    let fact = |k: usize| BigRational::from_integer((1..=k).fold(BigInt::one(), |a, b| a * b));
    let mut a = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if j + 1 >= i {
                let e = j + 1 - i;
                let mut p = BigRational::one();
                for _ in 0..e {
                    p *= t[i].clone();
                }
                a[i][j] = p / fact(e);
            }
        }
    }
    fact(n) * det(a)
}
