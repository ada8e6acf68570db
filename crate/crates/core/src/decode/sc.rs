//! Recursive SC decoder.

use crate::error::Result;
use crate::polar::{Bit, CodeSpec, Codeword, PaddedWord};
use crate::pretransform::{BitKind, JointGraph, PreTransform};

use super::{f_layer, g_layer, joint_graph, path_metric_update_with, DecodeResult, DecoderOptions, LlrWord};

/// SC decoding on the joint graph of `code` and `decode_pts`.
pub fn sc_decode(code: &CodeSpec, decode_pts: &[&PreTransform], llr: &LlrWord) -> Result<DecodeResult> {
    let graph = joint_graph(code, decode_pts, llr)?;
    Ok(ScDecoder::new(code.block_len(), DecoderOptions::default()).decode(&graph, llr))
}

/// SC decoder with reusable buffers.
#[derive(Clone, Debug)]
pub struct ScDecoder {
    opts: DecoderOptions,
    /// layers[l] holds the LLRs of the current node at layer l (2^l values).
    layers: Vec<Vec<f32>>,
    u: Vec<Bit>,
    x: Vec<Bit>,
}

impl ScDecoder {
    pub fn new(block_len: usize, opts: DecoderOptions) -> Self {
        let n = block_len.trailing_zeros() as usize;
        ScDecoder {
            opts,
            layers: (0..n).map(|l| vec![0.0; 1 << l]).collect(),
            u: vec![0; block_len],
            x: vec![0; block_len],
        }
    }

    /// Decodes one word. `llr` must have the graph's block length.
    pub fn decode(&mut self, graph: &JointGraph, llr: &LlrWord) -> DecodeResult {
        let pm = self.decode_bits(graph, llr);
        DecodeResult {
            u_p_hat: PaddedWord(self.u.clone()),
            x_hat: Codeword(self.x.clone()),
            path_metric: pm,
            in_subcode: true,
        }
    }

    /// Decodes and returns only whether the estimate equals `x`.
    pub fn decodes_to(&mut self, graph: &JointGraph, llr: &LlrWord, x: &Codeword) -> bool {
        self.decode_bits(graph, llr);
        self.x == x.bits()
    }

    fn decode_bits(&mut self, graph: &JointGraph, llr: &LlrWord) -> f64 {
        let n = graph.block_len().trailing_zeros() as usize;
        if self.layers.len() != n {
            *self = ScDecoder::new(graph.block_len(), self.opts);
        }
        let mut node = Node {
            graph,
            opts: self.opts,
            u: &mut self.u,
            pm: 0.0,
        };
        node.run(n, 0, llr.values(), &mut self.x, &mut self.layers);
        node.pm
    }
}

struct Node<'a> {
    graph: &'a JointGraph,
    opts: DecoderOptions,
    u: &'a mut [Bit],
    pm: f64,
}

impl Node<'_> {
    /// Decodes the subtree at `layer` whose first bit is `first`, writing the
    /// subtree codeword into `out`.
    fn run(&mut self, layer: usize, first: usize, llr: &[f32], out: &mut [Bit], below: &mut [Vec<f32>]) {
        if layer == 0 {
            let l = llr[0];
            let bit = match self.graph.kinds()[first] {
                BitKind::Frozen => 0,
                BitKind::Dynamic(r) => self.graph.rule(r).evaluate(self.u),
                BitKind::Info => (l < 0.0) as Bit,
            };
            self.pm = path_metric_update_with(self.opts.path_metric, self.pm, l as f64, bit);
            self.u[first] = bit;
            out[0] = bit;
            return;
        }
        let half = 1 << (layer - 1);
        let (lower, child) = below.split_at_mut(layer - 1);
        let child = &mut child[0];
        let (left, right) = out.split_at_mut(half);
        f_layer(self.opts.check_node, llr, child);
        self.run(layer - 1, first, child, left, lower);
        g_layer(llr, left, child);
        self.run(layer - 1, first + half, child, right, lower);
        for (l, &r) in left.iter_mut().zip(right.iter()) {
            *l ^= r;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Construction;
    use crate::polar::encode;

    #[test]
    fn noiseless_words_are_recovered() {
        let code = CodeSpec::new(64, 32, Construction::Sequence5g).unwrap();
        for m in 0..50u64 {
            let u: Vec<Bit> = (0..32).map(|j| (((m * 2654435761) >> (j % 31)) & 1) as Bit).collect();
            let x = encode(&code, &u).unwrap();
            let out = sc_decode(&code, &[], &LlrWord::noiseless(&x)).unwrap();
            assert_eq!(out.x_hat, x);
            assert_eq!(out.path_metric, 0.0);
        }
    }

    #[test]
    fn zero_llr_gives_zero_word() {
        let code = CodeSpec::new(16, 8, Construction::Sequence5g).unwrap();
        let out = sc_decode(&code, &[], &LlrWord::new([0.0; 16])).unwrap();
        assert_eq!(out.x_hat.0, vec![0; 16]);
    }

    #[test]
    fn small_code_matches_max_correlation() {
        // C(4,2) with I = {2, 3}: 4 codewords, brute-force best correlation
        let code = CodeSpec::from_info_set(4, vec![2, 3], Construction::Sequence5g).unwrap();
        let llr = LlrWord::new([1.0, -2.0, 1.0, 3.0]);
        let best = (0..4u8)
            .map(|m| encode(&code, &[m & 1, m >> 1]).unwrap())
            .max_by(|a, b| llr.correlation(a).total_cmp(&llr.correlation(b)))
            .unwrap();
        assert_eq!(sc_decode(&code, &[], &llr).unwrap().x_hat, best);
    }

    #[test]
    fn rejects_length_mismatch() {
        let code = CodeSpec::new(16, 8, Construction::Sequence5g).unwrap();
        assert!(sc_decode(&code, &[], &LlrWord::new([0.0; 8])).is_err());
    }
}
