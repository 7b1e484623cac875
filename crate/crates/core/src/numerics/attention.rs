use super::{Graph, NumericsError, Var};

/// Projection parameters of one multi-head self-attention block.
/// Weights are `[C, C]` (input-major), biases `[C]`.
#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    pub wq: Var,
    pub bq: Var,
    pub wk: Var,
    pub bk: Var,
    pub wv: Var,
    pub bv: Var,
    pub wo: Var,
    pub bo: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct AttentionOutput {
    pub output: Var,
    /// Node whose [`Graph::attention_probs`] holds the softmax weights.
    pub weights: Var,
}

impl Graph<'_> {
    /// Self-attention over the rows of `x: [N, C]` with `heads` heads of width
    /// `C/heads`, followed by the output projection.
    pub fn multi_head_self_attention(
        &mut self,
        x: Var,
        heads: usize,
        p: &AttentionVars,
    ) -> Result<AttentionOutput, NumericsError> {
        let c = *self.shape(x).last().unwrap();
        if heads == 0 || !c.is_multiple_of(heads) {
            return Err(NumericsError::Config(alloc::format!(
                "model dim {c} is not divisible by {heads} heads"
            )));
        }
        let q = self.linear(x, p.wq, p.bq)?;
        let k = self.linear(x, p.wk, p.bk)?;
        let v = self.linear(x, p.wv, p.bv)?;
        let weights = self.attention(q, k, v, heads)?;
        let output = self.linear(weights, p.wo, p.bo)?;
        Ok(AttentionOutput { output, weights })
    }
}
