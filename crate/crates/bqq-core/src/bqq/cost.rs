//! Inference-cost model for a linear layer with a batch of `d` inputs:
//! binary-weight/real-input AND operations, real additions, and real
//! multiplications, compared between first-order 1-bit quantization and a
//! one-stack BQQ layer.

/// Operation counts for one layer evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    pub and_ops: u64,
    pub add_ops: u64,
    pub mul_ops: u64,
}

impl OpCounts {
    fn weighted(&self, w: &CostWeights) -> f64 {
        self.and_ops as f64 * w.w_and + self.add_ops as f64 * w.w_add + self.mul_ops as f64 * w.w_mul
    }
}

/// Relative weights for the three operation kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub w_and: f64,
    pub w_add: f64,
    pub w_mul: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            w_and: 1.0,
            w_add: 1.0,
            w_mul: 1.0,
        }
    }
}

/// Cost comparison between the two layer forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub first_order: OpCounts,
    pub bqq: OpCounts,
    /// Weighted BQQ cost over weighted first-order cost.
    pub ratio: f64,
}

/// Operation counts for an `m x n` weight against an `n x d` input.
///
/// First order: `m n d` AND, `m d (n - 1)` ADD, `m d` MUL.
/// BQQ with inner dimension `l`: `l d (m + n)` AND,
/// `d [(m + n + 1) l + n - m - 2]` ADD, `3 l d` MUL.
pub fn inference_cost(m: usize, n: usize, l: usize, d: usize, weights: &CostWeights) -> CostReport {
    assert!(m >= 1 && n >= 1 && l >= 1 && d >= 1);
    let (m64, n64, l64, d64) = (m as u64, n as u64, l as u64, d as u64);

    let first_order = OpCounts {
        and_ops: m64 * n64 * d64,
        add_ops: m64 * d64 * (n64 - 1),
        mul_ops: m64 * d64,
    };
    // (m + n + 1) l + n - m - 2 >= 2n - 1 >= 1 for l >= 1, so the count is
    // always positive; computed in signed arithmetic to be explicit.
    let bqq_add = d as i64 * ((m as i64 + n as i64 + 1) * l as i64 + n as i64 - m as i64 - 2);
    debug_assert!(bqq_add > 0);
    let bqq = OpCounts {
        and_ops: l64 * d64 * (m64 + n64),
        add_ops: bqq_add as u64,
        mul_ops: 3 * l64 * d64,
    };
    let ratio = bqq.weighted(weights) / first_order.weighted(weights);
    CostReport {
        first_order,
        bqq,
        ratio,
    }
}
