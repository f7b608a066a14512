//! Integer-order Bessel functions of the first kind by Miller's backward
//! recurrence, normalized with `J₀ + 2 Σ J₂ₖ = 1`.

/// `J_0(x) ..= J_max_order(x)` for `x ≥ 0`.
pub fn bessel_j_orders(x: f64, max_order: usize) -> Vec<f64> {
    assert!(
        x >= 0.0 && x.is_finite(),
        "bessel argument must be finite and non-negative"
    );
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = max_order.max(x.ceil() as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;

    const BIG: f64 = 1e250;
    let mut j_next = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        // j holds J_k (unnormalized); produce J_{k-1}
        let j_prev = 2.0 * k as f64 / x * j - j_next;
        j_next = j;
        j = j_prev;
        let order = k - 1;
        if order <= max_order {
            out[order] = j;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > BIG {
            j /= BIG;
            j_next /= BIG;
            norm /= BIG;
            for v in out.iter_mut().skip(order) {
                *v /= BIG;
            }
        }
    }
    norm += j;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// `J_n(x)` for any integer order and `x ≥ 0`, using `J₋ₙ = (-1)ⁿ Jₙ`.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = bessel_j_orders(x, m)[m];
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}
