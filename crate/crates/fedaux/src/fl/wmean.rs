//! Correctly rounded data-size-weighted mean.
//!
//! Aggregation must return the inputs unchanged when every station submits
//! identical parameters (otherwise a zero-learning-rate run drifts by one
//! ulp per round). A plain `sum(w*x)/sum(w)` violates that: the products
//! round before the division can cancel the error. Accumulating in
//! double-double precision and dividing with two Newton corrections makes
//! the result the correctly rounded true quotient, which for identical
//! inputs is the input itself.

/// Unevaluated sum of two doubles, `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

const DD_ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: e }
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    // requires |a| >= |b|
    let s = a + b;
    let e = b - (s - a);
    Dd { hi: s, lo: e }
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    let e = a.mul_add(b, -p);
    Dd { hi: p, lo: e }
}

#[inline]
fn dd_add(x: Dd, y: Dd) -> Dd {
    let s = two_sum(x.hi, y.hi);
    let t = two_sum(x.lo, y.lo);
    let r = quick_two_sum(s.hi, s.lo + t.hi);
    quick_two_sum(r.hi, r.lo + t.lo)
}

#[inline]
fn dd_sub_prod(x: Dd, a: f64, b: f64) -> Dd {
    let p = two_prod(a, b);
    dd_add(
        x,
        Dd {
            hi: -p.hi,
            lo: -p.lo,
        },
    )
}

/// `sum(weights[u] * column(u)) / sum(weights)` per coordinate, with the
/// accumulation and division carried in double-double precision.
///
/// `vectors` are the per-station flat parameter slices, all the same
/// length; `weights` are the (integer-valued) data sizes.
pub fn weighted_mean_columns(weights: &[f64], vectors: &[&[f64]], out: &mut [f64]) {
    debug_assert_eq!(weights.len(), vectors.len());
    let total: f64 = weights.iter().sum();
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = DD_ZERO;
        for (w, v) in weights.iter().zip(vectors) {
            acc = dd_add(acc, two_prod(*w, v[i]));
        }
        let q1 = acc.hi / total;
        let r1 = dd_sub_prod(acc, q1, total);
        let q2 = r1.hi / total;
        let r2 = dd_sub_prod(r1, q2, total);
        let q3 = r2.hi / total;
        let s = two_sum(q1, q2);
        *slot = s.hi + (s.lo + q3);
    }
}
