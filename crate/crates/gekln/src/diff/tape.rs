use std::sync::Arc;

use super::params::{ParameterStore, SlotId};
use super::tensor::{dot, Tensor};
use super::DiffError;

/// Node handle on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// CSR-style grouping of source rows into output segments. A segment may
/// reference any subset of source rows, including none; rows may appear
/// in any number of segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Segments {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    max_index: Option<usize>,
}

impl Segments {
    pub fn from_csr(offsets: Vec<usize>, indices: Vec<usize>) -> Self {
        assert!(!offsets.is_empty() && *offsets.last().unwrap() == indices.len());
        debug_assert!(offsets.windows(2).all(|w| w[0] <= w[1]));
        let max_index = indices.iter().copied().max();
        Segments {
            offsets,
            indices,
            max_index,
        }
    }

    /// One segment per id value: row `r` belongs to segment `ids[r]`.
    pub fn from_ids(ids: &[usize], num_segments: usize) -> Self {
        let mut counts = vec![0usize; num_segments + 1];
        for &s in ids {
            assert!(s < num_segments, "segment id {s} out of range");
            counts[s + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut indices = vec![0usize; ids.len()];
        for (row, &s) in ids.iter().enumerate() {
            indices[cursor[s]] = row;
            cursor[s] += 1;
        }
        Segments::from_csr(offsets, indices)
    }

    pub fn from_lists(lists: &[Vec<usize>]) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for l in lists {
            indices.extend_from_slice(l);
            offsets.push(indices.len());
        }
        Segments::from_csr(offsets, indices)
    }

    pub fn num_segments(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn segment(&self, i: usize) -> &[usize] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }
}

enum Op {
    Constant,
    Param(SlotId),
    Matmul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    LeakyRelu(NodeId, f64),
    ConcatCols(Vec<NodeId>),
    RowGather(NodeId, Arc<Vec<usize>>),
    SegmentMean(NodeId, Arc<Segments>),
    InnerProductRows(NodeId, NodeId),
    InnerProductRowsAt(NodeId, NodeId, Arc<Vec<(usize, usize)>>),
    Square(NodeId),
    MeanAll(NodeId),
    Sigmoid(NodeId),
    BceWithLogits(NodeId, Arc<Vec<f64>>),
}

struct Node {
    values: Tensor,
    op: Op,
}

/// Define-by-run reverse-mode tape. Forward values are computed eagerly
/// as ops are recorded; [`Tape::backward`] consumes the trace and
/// accumulates parameter gradients into the store.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].values
    }

    pub fn shape(&self, id: NodeId) -> [usize; 2] {
        self.nodes[id.0].values.shape()
    }

    fn push(&mut self, values: Tensor, op: Op) -> NodeId {
        debug_assert!(values.all_finite(), "non-finite tensor on tape");
        self.nodes.push(Node { values, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, values: Tensor) -> NodeId {
        self.push(values, Op::Constant)
    }

    /// Lease a parameter onto the tape; backward accumulates its gradient
    /// back into the store slot.
    pub fn param(&mut self, store: &ParameterStore, slot: SlotId) -> NodeId {
        self.push(store.value(slot).clone(), Op::Param(slot))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        let [m, k] = self.shape(a);
        let [k2, n] = self.shape(b);
        if k != k2 {
            return Err(DiffError::ShapeMismatch {
                op: "matmul",
                lhs: [m, k],
                rhs: [k2, n],
            });
        }
        let mut out = Tensor::zeros(m, n);
        {
            let av = self.nodes[a.0].values.data();
            let bv = self.nodes[b.0].values.data();
            let ov = out.data_mut();
            for i in 0..m {
                for p in 0..k {
                    let a_ip = av[i * k + p];
                    let brow = &bv[p * n..(p + 1) * n];
                    let orow = &mut ov[i * n..(i + 1) * n];
                    for j in 0..n {
                        orow[j] += a_ip * brow[j];
                    }
                }
            }
        }
        Ok(self.push(out, Op::Matmul(a, b)))
    }

    fn binary_same_shape(
        &mut self,
        op_name: &'static str,
        a: NodeId,
        b: NodeId,
    ) -> Result<(), DiffError> {
        if self.shape(a) != self.shape(b) {
            return Err(DiffError::ShapeMismatch {
                op: op_name,
                lhs: self.shape(a),
                rhs: self.shape(b),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        self.binary_same_shape("add", a, b)?;
        let [r, c] = self.shape(a);
        let mut out = Tensor::zeros(r, c);
        for ((o, &x), &y) in out
            .data_mut()
            .iter_mut()
            .zip(self.nodes[a.0].values.data())
            .zip(self.nodes[b.0].values.data())
        {
            *o = x + y;
        }
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        self.binary_same_shape("sub", a, b)?;
        let [r, c] = self.shape(a);
        let mut out = Tensor::zeros(r, c);
        for ((o, &x), &y) in out
            .data_mut()
            .iter_mut()
            .zip(self.nodes[a.0].values.data())
            .zip(self.nodes[b.0].values.data())
        {
            *o = x - y;
        }
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        self.binary_same_shape("mul", a, b)?;
        let [r, c] = self.shape(a);
        let mut out = Tensor::zeros(r, c);
        for ((o, &x), &y) in out
            .data_mut()
            .iter_mut()
            .zip(self.nodes[a.0].values.data())
            .zip(self.nodes[b.0].values.data())
        {
            *o = x * y;
        }
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let [r, c] = self.shape(a);
        let mut out = Tensor::zeros(r, c);
        for (o, &x) in out.data_mut().iter_mut().zip(self.nodes[a.0].values.data()) {
            *o = k * x;
        }
        self.push(out, Op::Scale(a, k))
    }

    pub fn leaky_relu(&mut self, a: NodeId, slope: f64) -> NodeId {
        let [r, c] = self.shape(a);
        let mut out = Tensor::zeros(r, c);
        for (o, &x) in out.data_mut().iter_mut().zip(self.nodes[a.0].values.data()) {
            *o = if x >= 0.0 { x } else { slope * x };
        }
        self.push(out, Op::LeakyRelu(a, slope))
    }

    /// Concatenate along columns, in argument order.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, DiffError> {
        assert!(!parts.is_empty(), "concat_cols needs at least one input");
        let rows = self.shape(parts[0])[0];
        let mut cols = 0;
        for &p in parts {
            let [r, c] = self.shape(p);
            if r != rows {
                return Err(DiffError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: [rows, cols],
                    rhs: [r, c],
                });
            }
            cols += c;
        }
        let mut out = Tensor::zeros(rows, cols);
        {
            let ov = out.data_mut();
            let mut col_off = 0;
            for &p in parts {
                let [_, c] = self.shape(p);
                let pv = self.nodes[p.0].values.data();
                for i in 0..rows {
                    let dst = &mut ov[i * cols + col_off..i * cols + col_off + c];
                    dst.copy_from_slice(&pv[i * c..(i + 1) * c]);
                }
                col_off += c;
            }
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    /// `out[i] = src[rows[i]]`; rows may repeat.
    pub fn row_gather(&mut self, src: NodeId, rows: Arc<Vec<usize>>) -> Result<NodeId, DiffError> {
        let [r, c] = self.shape(src);
        if let Some(&bad) = rows.iter().find(|&&i| i >= r) {
            return Err(DiffError::IndexOutOfRange {
                op: "row_gather",
                index: bad,
                rows: r,
            });
        }
        let mut out = Tensor::zeros(rows.len(), c);
        {
            let sv = self.nodes[src.0].values.data();
            let ov = out.data_mut();
            for (i, &ri) in rows.iter().enumerate() {
                ov[i * c..(i + 1) * c].copy_from_slice(&sv[ri * c..(ri + 1) * c]);
            }
        }
        Ok(self.push(out, Op::RowGather(src, rows)))
    }

    /// Mean of the source rows in each segment; an empty segment yields a
    /// zero row.
    pub fn segment_mean(
        &mut self,
        src: NodeId,
        segments: Arc<Segments>,
    ) -> Result<NodeId, DiffError> {
        let [r, c] = self.shape(src);
        if let Some(max) = segments.max_index {
            if max >= r {
                return Err(DiffError::IndexOutOfRange {
                    op: "segment_mean",
                    index: max,
                    rows: r,
                });
            }
        }
        let mut out = Tensor::zeros(segments.num_segments(), c);
        {
            let sv = self.nodes[src.0].values.data();
            let ov = out.data_mut();
            for s in 0..segments.num_segments() {
                let members = segments.segment(s);
                if members.is_empty() {
                    continue;
                }
                let orow = &mut ov[s * c..(s + 1) * c];
                for &ri in members {
                    let srow = &sv[ri * c..(ri + 1) * c];
                    for j in 0..c {
                        orow[j] += srow[j];
                    }
                }
                let inv = 1.0 / members.len() as f64;
                for o in orow.iter_mut() {
                    *o *= inv;
                }
            }
        }
        Ok(self.push(out, Op::SegmentMean(src, segments)))
    }

    /// Row-wise inner products of two same-shape matrices -> n x 1.
    pub fn inner_product_rows(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        self.binary_same_shape("inner_product_rows", a, b)?;
        let [r, c] = self.shape(a);
        let mut out = Tensor::zeros(r, 1);
        {
            let av = self.nodes[a.0].values.data();
            let bv = self.nodes[b.0].values.data();
            let ov = out.data_mut();
            for i in 0..r {
                ov[i] = dot(&av[i * c..(i + 1) * c], &bv[i * c..(i + 1) * c]);
            }
        }
        Ok(self.push(out, Op::InnerProductRows(a, b)))
    }

    /// `out[t] = a[pairs[t].0] . b[pairs[t].1]` without materializing the
    /// gathered rows.
    pub fn inner_product_rows_at(
        &mut self,
        a: NodeId,
        b: NodeId,
        pairs: Arc<Vec<(usize, usize)>>,
    ) -> Result<NodeId, DiffError> {
        let [ra, c] = self.shape(a);
        let [rb, cb] = self.shape(b);
        if c != cb {
            return Err(DiffError::ShapeMismatch {
                op: "inner_product_rows_at",
                lhs: [ra, c],
                rhs: [rb, cb],
            });
        }
        for &(ia, ib) in pairs.iter() {
            if ia >= ra {
                return Err(DiffError::IndexOutOfRange {
                    op: "inner_product_rows_at",
                    index: ia,
                    rows: ra,
                });
            }
            if ib >= rb {
                return Err(DiffError::IndexOutOfRange {
                    op: "inner_product_rows_at",
                    index: ib,
                    rows: rb,
                });
            }
        }
        let mut out = Tensor::zeros(pairs.len(), 1);
        {
            let av = self.nodes[a.0].values.data();
            let bv = self.nodes[b.0].values.data();
            let ov = out.data_mut();
            for (t, &(ia, ib)) in pairs.iter().enumerate() {
                ov[t] = dot(&av[ia * c..(ia + 1) * c], &bv[ib * c..(ib + 1) * c]);
            }
        }
        Ok(self.push(out, Op::InnerProductRowsAt(a, b, pairs)))
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let [r, c] = self.shape(a);
        let mut out = Tensor::zeros(r, c);
        for (o, &x) in out.data_mut().iter_mut().zip(self.nodes[a.0].values.data()) {
            *o = x * x;
        }
        self.push(out, Op::Square(a))
    }

    /// Mean over all entries -> 1x1 scalar.
    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a.0].values.data();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        self.push(Tensor::scalar(mean), Op::MeanAll(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let [r, c] = self.shape(a);
        let mut out = Tensor::zeros(r, c);
        for (o, &x) in out.data_mut().iter_mut().zip(self.nodes[a.0].values.data()) {
            *o = 1.0 / (1.0 + (-x).exp());
        }
        self.push(out, Op::Sigmoid(a))
    }

    /// Numerically stable mean binary cross-entropy of logits against
    /// fixed labels -> 1x1 scalar.
    pub fn bce_with_logits(
        &mut self,
        logits: NodeId,
        labels: Arc<Vec<f64>>,
    ) -> Result<NodeId, DiffError> {
        let [r, c] = self.shape(logits);
        if r * c != labels.len() {
            return Err(DiffError::ShapeMismatch {
                op: "bce_with_logits",
                lhs: [r, c],
                rhs: [labels.len(), 1],
            });
        }
        let zv = self.nodes[logits.0].values.data();
        let mut acc = 0.0;
        for (&z, &y) in zv.iter().zip(labels.iter()) {
            acc += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        }
        let loss = acc / labels.len() as f64;
        Ok(self.push(Tensor::scalar(loss), Op::BceWithLogits(logits, labels)))
    }

    /// Reverse pass from a scalar loss node. Consumes the trace and adds
    /// each parameter's gradient into its store slot.
    pub fn backward(self, loss: NodeId, store: &mut ParameterStore) -> Result<(), DiffError> {
        if self.nodes.is_empty() || loss.0 >= self.nodes.len() {
            return Err(DiffError::NoTrace);
        }
        let loss_shape = self.nodes[loss.0].values.shape();
        if loss_shape != [1, 1] {
            return Err(DiffError::NotScalar { shape: loss_shape });
        }
        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.values.len()])
            .collect();
        grads[loss.0][0] = 1.0;

        for id in (0..self.nodes.len()).rev() {
            // Inputs always precede their outputs on the tape.
            let (lower, upper) = grads.split_at_mut(id);
            let gout = &upper[0];
            let node = &self.nodes[id];
            match &node.op {
                Op::Constant | Op::Param(_) => {}
                Op::Matmul(a, b) => {
                    let [m, k] = self.nodes[a.0].values.shape();
                    let n = self.nodes[b.0].values.shape()[1];
                    let av = self.nodes[a.0].values.data();
                    let bv = self.nodes[b.0].values.data();
                    {
                        let ga = &mut lower[a.0];
                        for i in 0..m {
                            for p in 0..k {
                                let mut acc = 0.0;
                                let grow = &gout[i * n..(i + 1) * n];
                                let brow = &bv[p * n..(p + 1) * n];
                                for j in 0..n {
                                    acc += grow[j] * brow[j];
                                }
                                ga[i * k + p] += acc;
                            }
                        }
                    }
                    {
                        let gb = &mut lower[b.0];
                        for i in 0..m {
                            for p in 0..k {
                                let a_ip = av[i * k + p];
                                let grow = &gout[i * n..(i + 1) * n];
                                let gbrow = &mut gb[p * n..(p + 1) * n];
                                for j in 0..n {
                                    gbrow[j] += a_ip * grow[j];
                                }
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    // Sequential accumulation stays correct when a == b.
                    for (g, &go) in lower[a.0].iter_mut().zip(gout.iter()) {
                        *g += go;
                    }
                    for (g, &go) in lower[b.0].iter_mut().zip(gout.iter()) {
                        *g += go;
                    }
                }
                Op::Sub(a, b) => {
                    for (g, &go) in lower[a.0].iter_mut().zip(gout.iter()) {
                        *g += go;
                    }
                    for (g, &go) in lower[b.0].iter_mut().zip(gout.iter()) {
                        *g -= go;
                    }
                }
                Op::Mul(a, b) => {
                    let av = self.nodes[a.0].values.data();
                    let bv = self.nodes[b.0].values.data();
                    for ((g, &go), &y) in lower[a.0].iter_mut().zip(gout.iter()).zip(bv) {
                        *g += go * y;
                    }
                    for ((g, &go), &x) in lower[b.0].iter_mut().zip(gout.iter()).zip(av) {
                        *g += go * x;
                    }
                }
                Op::Scale(a, k) => {
                    for (g, &go) in lower[a.0].iter_mut().zip(gout) {
                        *g += k * go;
                    }
                }
                Op::LeakyRelu(a, slope) => {
                    let av = self.nodes[a.0].values.data();
                    for ((g, &go), &x) in lower[a.0].iter_mut().zip(gout).zip(av) {
                        *g += go * if x >= 0.0 { 1.0 } else { *slope };
                    }
                }
                Op::ConcatCols(parts) => {
                    let rows = node.values.rows();
                    let cols = node.values.cols();
                    let mut col_off = 0;
                    for &p in parts {
                        let c = self.nodes[p.0].values.cols();
                        let gp = &mut lower[p.0];
                        for i in 0..rows {
                            let src = &gout[i * cols + col_off..i * cols + col_off + c];
                            let dst = &mut gp[i * c..(i + 1) * c];
                            for j in 0..c {
                                dst[j] += src[j];
                            }
                        }
                        col_off += c;
                    }
                }
                Op::RowGather(src, rows) => {
                    let c = self.nodes[src.0].values.cols();
                    let gs = &mut lower[src.0];
                    for (i, &ri) in rows.iter().enumerate() {
                        let grow = &gout[i * c..(i + 1) * c];
                        let dst = &mut gs[ri * c..(ri + 1) * c];
                        for j in 0..c {
                            dst[j] += grow[j];
                        }
                    }
                }
                Op::SegmentMean(src, segments) => {
                    let c = self.nodes[src.0].values.cols();
                    let gs = &mut lower[src.0];
                    for s in 0..segments.num_segments() {
                        let members = segments.segment(s);
                        if members.is_empty() {
                            continue;
                        }
                        let inv = 1.0 / members.len() as f64;
                        let grow = &gout[s * c..(s + 1) * c];
                        for &ri in members {
                            let dst = &mut gs[ri * c..(ri + 1) * c];
                            for j in 0..c {
                                dst[j] += inv * grow[j];
                            }
                        }
                    }
                }
                Op::InnerProductRows(a, b) => {
                    let c = self.nodes[a.0].values.cols();
                    let r = self.nodes[a.0].values.rows();
                    let av = self.nodes[a.0].values.data();
                    let bv = self.nodes[b.0].values.data();
                    {
                        let ga = &mut lower[a.0];
                        for i in 0..r {
                            let go = gout[i];
                            for j in 0..c {
                                ga[i * c + j] += go * bv[i * c + j];
                            }
                        }
                    }
                    let gb = &mut lower[b.0];
                    for i in 0..r {
                        let go = gout[i];
                        for j in 0..c {
                            gb[i * c + j] += go * av[i * c + j];
                        }
                    }
                }
                Op::InnerProductRowsAt(a, b, pairs) => {
                    let c = self.nodes[a.0].values.cols();
                    let av = self.nodes[a.0].values.data();
                    let bv = self.nodes[b.0].values.data();
                    {
                        let ga = &mut lower[a.0];
                        for (t, &(ia, ib)) in pairs.iter().enumerate() {
                            let go = gout[t];
                            for j in 0..c {
                                ga[ia * c + j] += go * bv[ib * c + j];
                            }
                        }
                    }
                    let gb = &mut lower[b.0];
                    for (t, &(ia, ib)) in pairs.iter().enumerate() {
                        let go = gout[t];
                        for j in 0..c {
                            gb[ib * c + j] += go * av[ia * c + j];
                        }
                    }
                }
                Op::Square(a) => {
                    let av = self.nodes[a.0].values.data();
                    for ((g, &go), &x) in lower[a.0].iter_mut().zip(gout).zip(av) {
                        *g += 2.0 * x * go;
                    }
                }
                Op::MeanAll(a) => {
                    let n = self.nodes[a.0].values.len() as f64;
                    let go = gout[0] / n;
                    for g in lower[a.0].iter_mut() {
                        *g += go;
                    }
                }
                Op::Sigmoid(a) => {
                    let yv = node.values.data();
                    for ((g, &go), &y) in lower[a.0].iter_mut().zip(gout).zip(yv) {
                        *g += go * y * (1.0 - y);
                    }
                }
                Op::BceWithLogits(a, labels) => {
                    let zv = self.nodes[a.0].values.data();
                    let n = labels.len() as f64;
                    let go = gout[0] / n;
                    for ((g, &z), &y) in lower[a.0].iter_mut().zip(zv).zip(labels.iter()) {
                        let s = 1.0 / (1.0 + (-z).exp());
                        *g += go * (s - y);
                    }
                }
            }
        }

        for (id, node) in self.nodes.iter().enumerate() {
            if let Op::Param(slot) = node.op {
                let dst = store.grad_mut(slot).data_mut();
                for (d, &g) in dst.iter_mut().zip(&grads[id]) {
                    *d += g;
                }
            }
        }
        Ok(())
    }
}
