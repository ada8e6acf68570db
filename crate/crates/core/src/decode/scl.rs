//! Iterative SC-list decoder with copy-on-write LLR and partial-sum arrays.
//!
//! Every path owns one slot per layer in each pool. Forking a path only bumps
//! reference counts; a shared slot is replaced by a fresh one the next time
//! the path writes that layer. Writes always cover the whole layer, so a
//! fresh slot never needs the old contents.

use crate::error::{Error, Result};
use crate::polar::{transform_in_place, Bit, CodeSpec, Codeword, PaddedWord};
use crate::pretransform::{BitKind, JointGraph, PreTransform};

use super::{
    f_layer, g_layer, joint_graph, path_metric_update_with, CandidateList, DecodeResult, DecoderOptions, LlrWord,
};

const NONE: u32 = u32::MAX;

/// Largest supported log2 block length.
const MAX_LOG_LEN: usize = 20;

/// SCL decoding with list size `list_size` on the joint graph of `code` and
/// `decode_pts`. The selected entry is the lowest-metric entry on which the
/// `genie` holds; if none does, the lowest-metric entry flagged
/// `in_subcode = false`.
pub fn scl_decode(
    code: &CodeSpec,
    decode_pts: &[&PreTransform],
    llr: &LlrWord,
    list_size: usize,
    genie: Option<&PreTransform>,
) -> Result<(DecodeResult, CandidateList)> {
    let graph = joint_graph(code, decode_pts, llr)?;
    if let Some(g) = genie {
        crate::pretransform::validate(g, code).map_err(|v| Error::invalid(v.to_string()))?;
    }
    let mut dec = SclDecoder::new(code.block_len(), list_size, DecoderOptions::default())?;
    Ok(dec.decode(&graph, llr, genie))
}

/// Slot pool for one layer.
#[derive(Clone, Debug)]
struct Pool<T> {
    width: usize,
    data: Vec<T>,
    refs: Vec<u32>,
    free: Vec<u32>,
}

impl<T: Copy + Default> Pool<T> {
    fn new(width: usize, slots: usize) -> Self {
        Pool {
            width,
            data: vec![T::default(); width * slots],
            refs: vec![0; slots],
            free: (0..slots as u32).rev().collect(),
        }
    }

    fn reset(&mut self) {
        self.refs.iter_mut().for_each(|r| *r = 0);
        self.free.clear();
        self.free.extend((0..self.refs.len() as u32).rev());
    }

    fn get(&self, slot: u32) -> &[T] {
        let s = slot as usize * self.width;
        &self.data[s..s + self.width]
    }

    fn get_mut(&mut self, slot: u32) -> &mut [T] {
        let s = slot as usize * self.width;
        &mut self.data[s..s + self.width]
    }

    /// Returns a slot the holder of `slot` may overwrite.
    fn writable(&mut self, slot: &mut u32) -> u32 {
        if *slot != NONE && self.refs[*slot as usize] == 1 {
            return *slot;
        }
        self.release(*slot);
        let fresh = self.free.pop().expect("slot pool exhausted");
        self.refs[fresh as usize] = 1;
        *slot = fresh;
        fresh
    }

    fn share(&mut self, slot: u32) {
        if slot != NONE {
            self.refs[slot as usize] += 1;
        }
    }

    fn release(&mut self, slot: u32) {
        if slot != NONE {
            let r = &mut self.refs[slot as usize];
            *r -= 1;
            if *r == 0 {
                self.free.push(slot);
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Path {
    llr: [u32; MAX_LOG_LEN],
    psum: [u32; MAX_LOG_LEN],
    pm: f64,
    u: Vec<Bit>,
}

/// Marks in `taken_at` during a fork.
const DROPPED: usize = usize::MAX;
const KEPT: usize = usize::MAX - 1;

/// SCL decoder with reusable buffers for one block length and list size.
#[derive(Clone, Debug)]
pub struct SclDecoder {
    n: usize,
    list_size: usize,
    opts: DecoderOptions,
    llr: Vec<Pool<f32>>,
    psum: Vec<Pool<Bit>>,
    scratch: Vec<Bit>,
    cands: Vec<(f64, u32, Bit)>,
    paths: Vec<Path>,
    next: Vec<Path>,
    spare_u: Vec<Vec<Bit>>,
    taken_at: Vec<usize>,
}

impl SclDecoder {
    pub fn new(block_len: usize, list_size: usize, opts: DecoderOptions) -> Result<Self> {
        if list_size == 0 {
            return Err(Error::invalid("list size must be at least 1"));
        }
        if !block_len.is_power_of_two() {
            return Err(Error::invalid("block length must be a power of two"));
        }
        let n = block_len.trailing_zeros() as usize;
        if n > MAX_LOG_LEN {
            return Err(Error::invalid("block length too large"));
        }
        Ok(SclDecoder {
            n,
            list_size,
            opts,
            llr: (0..n).map(|l| Pool::new(1 << l, list_size)).collect(),
            psum: (0..n).map(|l| Pool::new(1 << l, list_size)).collect(),
            scratch: vec![0; block_len],
            cands: Vec::with_capacity(2 * list_size),
            paths: Vec::with_capacity(list_size),
            next: Vec::with_capacity(list_size),
            spare_u: Vec::new(),
            taken_at: Vec::with_capacity(list_size),
        })
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    pub fn options(&self) -> DecoderOptions {
        self.opts
    }

    /// Decodes one word; see [`scl_decode`] for the selection rule.
    pub fn decode(
        &mut self,
        graph: &JointGraph,
        llr: &LlrWord,
        genie: Option<&PreTransform>,
    ) -> (DecodeResult, CandidateList) {
        let list = self.decode_list(graph, llr, genie);
        let selected = list
            .entries
            .iter()
            .find(|e| e.in_subcode)
            .unwrap_or(&list.entries[0])
            .clone();
        (selected, list)
    }

    /// Runs the decoder and returns the final list. Entries are flagged
    /// `in_subcode` when the genie (if any) holds on them.
    pub fn decode_list(&mut self, graph: &JointGraph, llr: &LlrWord, genie: Option<&PreTransform>) -> CandidateList {
        let block_len = graph.block_len();
        assert_eq!(block_len, 1 << self.n, "decoder built for a different block length");
        assert_eq!(llr.len(), block_len, "LLR length mismatch");
        self.llr.iter_mut().for_each(Pool::reset);
        self.psum.iter_mut().for_each(Pool::reset);

        let mut paths = std::mem::take(&mut self.paths);
        for p in paths.drain(..) {
            self.spare_u.push(p.u);
        }
        let mut u = self.spare_u.pop().unwrap_or_default();
        u.clear();
        u.resize(block_len, 0);
        paths.push(Path {
            llr: [NONE; MAX_LOG_LEN],
            psum: [NONE; MAX_LOG_LEN],
            pm: 0.0,
            u,
        });
        for i in 0..block_len {
            for p in paths.iter_mut() {
                self.update_llrs(p, i, llr.values());
            }
            match graph.kinds()[i] {
                BitKind::Info => self.fork(&mut paths, i),
                kind => {
                    for p in paths.iter_mut() {
                        let bit = match kind {
                            BitKind::Dynamic(r) => graph.rule(r).evaluate(&p.u),
                            _ => 0,
                        };
                        let l = self.decision_llr(p, llr.values());
                        p.pm = path_metric_update_with(self.opts.path_metric, p.pm, l as f64, bit);
                        p.u[i] = bit;
                    }
                }
            }
            for p in paths.iter_mut() {
                self.update_psums(p, i);
            }
        }

        let mut order: Vec<usize> = (0..paths.len()).collect();
        order.sort_by(|&a, &b| paths[a].pm.total_cmp(&paths[b].pm).then(a.cmp(&b)));
        let entries = order
            .into_iter()
            .map(|j| {
                let p = &paths[j];
                let mut x = p.u.clone();
                transform_in_place(&mut x);
                DecodeResult {
                    in_subcode: genie.is_none_or(|g| g.holds_on(&p.u)),
                    u_p_hat: PaddedWord(p.u.clone()),
                    x_hat: Codeword(x),
                    path_metric: p.pm,
                }
            })
            .collect();
        self.paths = paths;
        CandidateList { entries }
    }

    fn decision_llr(&self, p: &Path, channel: &[f32]) -> f32 {
        if self.n == 0 {
            channel[0]
        } else {
            self.llr[0].get(p.llr[0])[0]
        }
    }

    /// Computes the layer-0 LLR of bit `i` for path `p`.
    fn update_llrs(&mut self, p: &mut Path, i: usize, channel: &[f32]) {
        let n = self.n;
        let top = if i == 0 { n } else { i.trailing_zeros() as usize + 1 };
        for layer in (0..top).rev() {
            let out_slot = self.llr[layer].writable(&mut p.llr[layer]);
            let (lower, upper) = self.llr.split_at_mut(layer + 1);
            let out = lower[layer].get_mut(out_slot);
            let input = if layer + 1 == n {
                channel
            } else {
                upper[0].get(p.llr[layer + 1])
            };
            if i != 0 && layer + 1 == top {
                g_layer(input, self.psum[layer].get(p.psum[layer]), out);
            } else {
                f_layer(self.opts.check_node, input, out);
            }
        }
    }

    /// Folds the decision on bit `i` into the partial-sum arrays.
    fn update_psums(&mut self, p: &mut Path, i: usize) {
        let cur = &mut self.scratch;
        cur[0] = p.u[i];
        let mut layer = 0;
        while layer < self.n {
            let width = 1 << layer;
            if (i >> layer) & 1 == 0 {
                let slot = self.psum[layer].writable(&mut p.psum[layer]);
                self.psum[layer].get_mut(slot).copy_from_slice(&cur[..width]);
                return;
            }
            let left = self.psum[layer].get(p.psum[layer]);
            cur.copy_within(0..width, width);
            for (c, &l) in cur[..width].iter_mut().zip(left) {
                *c ^= l;
            }
            layer += 1;
        }
    }

    /// Forks every path on information bit `i` and keeps the best
    /// `list_size` children ordered by (metric, parent index, bit).
    fn fork(&mut self, paths: &mut Vec<Path>, i: usize) {
        self.cands.clear();
        for (idx, p) in paths.iter().enumerate() {
            let l = self.decision_llr(p, &[]) as f64;
            for bit in 0..2 {
                let pm = path_metric_update_with(self.opts.path_metric, p.pm, l, bit);
                self.cands.push((pm, idx as u32, bit));
            }
        }
        let by_key = |a: &(f64, u32, Bit), b: &(f64, u32, Bit)| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2)));
        if self.cands.len() > self.list_size {
            self.cands.select_nth_unstable_by(self.list_size - 1, by_key);
            self.cands.truncate(self.list_size);
        }
        self.cands.sort_unstable_by(by_key);

        self.taken_at.clear();
        self.taken_at.resize(paths.len(), DROPPED);
        for &(_, parent, _) in &self.cands {
            self.taken_at[parent as usize] = KEPT;
        }
        #[allow(clippy::needless_range_loop)]
        for idx in 0..paths.len() {
            if self.taken_at[idx] == DROPPED {
                let (llr, psum) = (paths[idx].llr, paths[idx].psum);
                self.release(&llr, &psum);
                let u = std::mem::take(&mut paths[idx].u);
                self.spare_u.push(u);
            }
        }
        let mut next = std::mem::take(&mut self.next);
        next.clear();
        for c in 0..self.cands.len() {
            let (pm, parent, bit) = self.cands[c];
            let parent = parent as usize;
            let mut child = if self.taken_at[parent] == KEPT {
                self.taken_at[parent] = next.len();
                let p = &mut paths[parent];
                Path {
                    llr: p.llr,
                    psum: p.psum,
                    pm: p.pm,
                    u: std::mem::take(&mut p.u),
                }
            } else {
                let twin: &Path = &next[self.taken_at[parent]];
                let (llr, psum) = (twin.llr, twin.psum);
                let mut u = self.spare_u.pop().unwrap_or_default();
                u.clear();
                u.extend_from_slice(&twin.u);
                self.share(&llr, &psum);
                Path { llr, psum, pm, u }
            };
            child.pm = pm;
            child.u[i] = bit;
            next.push(child);
        }
        std::mem::swap(paths, &mut next);
        self.next = next;
    }

    fn share(&mut self, llr: &[u32], psum: &[u32]) {
        for (pool, &s) in self.llr.iter_mut().zip(llr) {
            pool.share(s);
        }
        for (pool, &s) in self.psum.iter_mut().zip(psum) {
            pool.share(s);
        }
    }

    fn release(&mut self, llr: &[u32], psum: &[u32]) {
        for (pool, &s) in self.llr.iter_mut().zip(llr) {
            pool.release(s);
        }
        for (pool, &s) in self.psum.iter_mut().zip(psum) {
            pool.release(s);
        }
    }
}
