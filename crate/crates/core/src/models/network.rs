//! The neural predictors: representation net, per-treatment outcome heads,
//! and the optional propensity density head.
//!
//! Every head has two forward paths that must agree: a tape path used during
//! training (differentiable) and a plain ndarray path used for inference and
//! evaluation. `tape_and_plain_forwards_agree` in the tests pins them
//! together.

use super::{bin_index, Arch, ModelConfig, ModelError, ParamId, ParamStore};
use crate::autodiff::{elu_scalar, softmax_array, Tape, Var};
use crate::basis::{basis_matrix_var, SplineBasis};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

#[derive(Debug, Clone, Copy)]
struct Linear {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone)]
struct VcLinear {
    /// One coefficient matrix per basis function; theta(s) = sum
    /// psi_l(s) * alphas[l].
    alphas: Vec<ParamId>,
    /// L x out bias coefficients.
    bias: ParamId,
}

#[derive(Debug, Clone)]
enum OutcomeHead {
    Mlp { hidden: Linear, out: Linear },
    DrNet { bins: Vec<(Linear, Linear)> },
    VcNet { hidden: VcLinear, out: VcLinear },
}

/// A representation network plus outcome head(s) and optional propensity
/// head, with all parameters in one flat store.
#[derive(Debug, Clone)]
pub struct NetworkModel<F: Scalar> {
    config: ModelConfig,
    params: ParamStore<F>,
    rep: [Linear; 2],
    heads: Vec<OutcomeHead>,
    propensity: Option<Linear>,
    basis: SplineBasis<F>,
}

/// Tape leaves for every parameter of a bound model, in store order.
pub struct BoundModel {
    vars: Vec<Var>,
}

impl BoundModel {
    fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Contiguous (treatment, bin) spans of a batch sorted for head routing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchGroups {
    pub spans: Vec<GroupSpan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupSpan {
    pub w: usize,
    pub bin: usize,
    pub start: usize,
    pub end: usize,
}

impl BatchGroups {
    /// Stable-sort batch indices by (w, bin) so each head sees one contiguous
    /// row range. Returns the new row order and the spans over it.
    pub fn sort<F: Scalar>(
        arch: Arch,
        drnet_bins: usize,
        w: &[usize],
        s: &[F],
    ) -> (Vec<usize>, BatchGroups) {
        let key = |i: usize| -> (usize, usize) {
            let bin = match arch {
                Arch::DrNet => bin_index(s[i].widen(), drnet_bins),
                _ => 0,
            };
            (w[i], bin)
        };
        let mut order: Vec<usize> = (0..w.len()).collect();
        order.sort_by_key(|&i| key(i));
        let mut spans = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let k = key(order[start]);
            let mut end = start + 1;
            while end < order.len() && key(order[end]) == k {
                end += 1;
            }
            spans.push(GroupSpan {
                w: k.0,
                bin: k.1,
                start,
                end,
            });
            start = end;
        }
        (order, BatchGroups { spans })
    }
}

fn glorot<F: Scalar>(rng: &mut SplitMix64, rows: usize, cols: usize) -> Array2<F> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| F::of((2.0 * rng.uniform_f64() - 1.0) * limit))
}

impl<F: Scalar> NetworkModel<F> {
    pub fn new(config: ModelConfig) -> Self {
        let mut rng = SplitMix64::derive(config.init_seed, 0x1417);
        let mut params = ParamStore::new();
        let h = config.hidden;
        let rep_in = match config.arch {
            Arch::Mlp => config.input_dim + 1,
            _ => config.input_dim,
        };
        let mut linear = |params: &mut ParamStore<F>,
                          rng: &mut SplitMix64,
                          name: &str,
                          fan_in: usize,
                          fan_out: usize| {
            Linear {
                w: params.push(format!("{name}.w"), glorot(rng, fan_in, fan_out)),
                b: params.push(format!("{name}.b"), Array2::zeros((1, fan_out))),
            }
        };
        let rep = [
            linear(&mut params, &mut rng, "rep0", rep_in, h),
            linear(&mut params, &mut rng, "rep1", h, h),
        ];
        let knots: Vec<F> = config.vcnet_knots.iter().map(|&k| F::of(k)).collect();
        let basis = SplineBasis::new(&knots).expect("valid interior knots");
        let basis_dim = basis.dim();
        let mut vc_linear = |params: &mut ParamStore<F>,
                             rng: &mut SplitMix64,
                             name: &str,
                             fan_in: usize,
                             fan_out: usize| {
            VcLinear {
                alphas: (0..basis_dim)
                    .map(|l| params.push(format!("{name}.alpha{l}"), glorot(rng, fan_in, fan_out)))
                    .collect(),
                bias: params.push(format!("{name}.bias"), Array2::zeros((basis_dim, fan_out))),
            }
        };

        let heads = (0..config.treatment_types)
            .map(|w| match config.arch {
                Arch::Mlp => OutcomeHead::Mlp {
                    hidden: linear(&mut params, &mut rng, &format!("w{w}.hidden"), h, h),
                    out: linear(&mut params, &mut rng, &format!("w{w}.out"), h, 1),
                },
                Arch::DrNet => OutcomeHead::DrNet {
                    bins: (0..config.drnet_bins)
                        .map(|b| {
                            (
                                linear(&mut params, &mut rng, &format!("w{w}.bin{b}.hidden"), h + 1, h),
                                linear(&mut params, &mut rng, &format!("w{w}.bin{b}.out"), h, 1),
                            )
                        })
                        .collect(),
                },
                Arch::VcNet => OutcomeHead::VcNet {
                    hidden: vc_linear(&mut params, &mut rng, &format!("w{w}.hidden"), h + 1, h),
                    out: vc_linear(&mut params, &mut rng, &format!("w{w}.out"), h, 1),
                },
            })
            .collect();

        let propensity = config
            .propensity_bins
            .map(|bins| linear(&mut params, &mut rng, "prop", h, bins));

        NetworkModel {
            config,
            params,
            rep,
            heads,
            propensity,
            basis,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<F> {
        &mut self.params
    }

    pub fn basis(&self) -> &SplineBasis<F> {
        &self.basis
    }

    pub fn has_propensity_head(&self) -> bool {
        self.propensity.is_some()
    }

    /// Scalar parameter count of one outcome head.
    pub fn head_parameter_count(&self, w: usize) -> usize {
        let count = |id: &ParamId| self.params.get(*id).len();
        match &self.heads[w] {
            OutcomeHead::Mlp { hidden, out } => {
                count(&hidden.w) + count(&hidden.b) + count(&out.w) + count(&out.b)
            }
            OutcomeHead::DrNet { bins } => bins
                .iter()
                .map(|(h, o)| count(&h.w) + count(&h.b) + count(&o.w) + count(&o.b))
                .sum(),
            OutcomeHead::VcNet { hidden, out } => [hidden, out]
                .iter()
                .map(|vc| vc.alphas.iter().map(&count).sum::<usize>() + count(&vc.bias))
                .sum(),
        }
    }

    fn check_input(&self, x: &ArrayView2<F>) -> Result<(), ModelError> {
        if x.ncols() != self.config.input_dim {
            return Err(ModelError::InputDim {
                expected: self.config.input_dim,
                got: x.ncols(),
            });
        }
        Ok(())
    }

    fn check_treatment(&self, w: usize) -> Result<(), ModelError> {
        if w >= self.heads.len() {
            return Err(ModelError::TreatmentOutOfRange(w));
        }
        Ok(())
    }

    // ---- plain (inference) path ----

    fn linear_plain(&self, lin: Linear, input: &Array2<F>) -> Array2<F> {
        let w = self.params.get(lin.w);
        let b = self.params.get(lin.b);
        let mut out = input.dot(w);
        out += &b.broadcast(out.dim()).expect("bias broadcast");
        out
    }

    fn vc_weight_at(&self, vc: &VcLinear, psi: &[F]) -> (Array2<F>, Array2<F>) {
        let mut w = self.params.get(vc.alphas[0]).mapv(|v| v * psi[0]);
        for (l, &p) in psi.iter().enumerate().skip(1) {
            w.zip_mut_with(self.params.get(vc.alphas[l]), |acc, &a| *acc += p * a);
        }
        let bias = self.params.get(vc.bias);
        let mut b = Array2::zeros((1, bias.ncols()));
        for (l, &p) in psi.iter().enumerate() {
            for c in 0..bias.ncols() {
                b[[0, c]] += p * bias[[l, c]];
            }
        }
        (w, b)
    }

    fn vc_plain_batch(&self, vc: &VcLinear, input: &Array2<F>, p: &Array2<F>) -> Array2<F> {
        let out_dim = self.params.get(vc.bias).ncols();
        let n = input.nrows();
        let mut acc = p.dot(self.params.get(vc.bias));
        for (l, alpha) in vc.alphas.iter().enumerate() {
            let zl = input.dot(self.params.get(*alpha));
            let col = p.column(l);
            for r in 0..n {
                for c in 0..out_dim {
                    acc[[r, c]] += col[r] * zl[[r, c]];
                }
            }
        }
        acc
    }

    /// Representation of a covariate batch; the MLP feeds (x, s) jointly so
    /// it needs the dosage column too.
    pub fn representation(
        &self,
        x: &Array2<F>,
        s: &Array1<F>,
    ) -> Result<Array2<F>, ModelError> {
        self.check_input(&x.view())?;
        let input = self.rep_input(x, s);
        let h0 = self.linear_plain(self.rep[0], &input).mapv(elu_scalar);
        Ok(self.linear_plain(self.rep[1], &h0).mapv(elu_scalar))
    }

    fn head_forward_plain(
        &self,
        w: usize,
        rep_rows: &Array2<F>,
        s_rows: &[F],
    ) -> Result<Array1<F>, ModelError> {
        let n = rep_rows.nrows();
        let out = match &self.heads[w] {
            OutcomeHead::Mlp { hidden, out } => {
                let h = self.linear_plain(*hidden, rep_rows).mapv(elu_scalar);
                self.linear_plain(*out, &h)
            }
            OutcomeHead::DrNet { bins } => {
                let mut input = Array2::zeros((n, rep_rows.ncols() + 1));
                input
                    .slice_mut(ndarray::s![.., ..rep_rows.ncols()])
                    .assign(rep_rows);
                for (i, &si) in s_rows.iter().enumerate() {
                    input[[i, rep_rows.ncols()]] = si;
                }
                // callers group rows so that all of them share a bin
                let bin = bin_index(s_rows[0].widen(), bins.len());
                let (hidden, out) = &bins[bin];
                let h = self.linear_plain(*hidden, &input).mapv(elu_scalar);
                self.linear_plain(*out, &h)
            }
            OutcomeHead::VcNet { hidden, out } => {
                let mut input = Array2::zeros((n, rep_rows.ncols() + 1));
                input
                    .slice_mut(ndarray::s![.., ..rep_rows.ncols()])
                    .assign(rep_rows);
                for (i, &si) in s_rows.iter().enumerate() {
                    input[[i, rep_rows.ncols()]] = si;
                }
                let s_arr = Array1::from_vec(s_rows.to_vec());
                let p = self.basis.eval_matrix(s_arr.view())?;
                let h = self.vc_plain_batch(hidden, &input, &p).mapv(elu_scalar);
                self.vc_plain_batch(out, &h, &p)
            }
        };
        Ok(out.column(0).to_owned())
    }

    /// Predictions at per-row treatments and dosages.
    pub fn predict_rows(
        &self,
        x: &Array2<F>,
        w: &[usize],
        s: &Array1<F>,
    ) -> Result<Array1<F>, ModelError> {
        self.check_input(&x.view())?;
        for &wi in w {
            self.check_treatment(wi)?;
        }
        let rep = self.representation(x, s)?;
        let (order, groups) =
            BatchGroups::sort(self.config.arch, self.config.drnet_bins, w, s.as_slice().unwrap());
        let mut out = Array1::zeros(x.nrows());
        for span in &groups.spans {
            let idx = &order[span.start..span.end];
            let mut rep_rows = Array2::zeros((idx.len(), rep.ncols()));
            for (r, &i) in idx.iter().enumerate() {
                rep_rows.row_mut(r).assign(&rep.row(i));
            }
            let s_rows: Vec<F> = idx.iter().map(|&i| s[i]).collect();
            let vals = self.head_forward_plain(span.w, &rep_rows, &s_rows)?;
            for (r, &i) in idx.iter().enumerate() {
                out[i] = vals[r];
            }
        }
        Ok(out)
    }

    /// Predictions for every row at one shared (w, s); the grid-evaluation
    /// hot path.
    pub fn predict_batch_at(
        &self,
        x: &Array2<F>,
        w: usize,
        s: F,
    ) -> Result<Array1<F>, ModelError> {
        self.check_input(&x.view())?;
        self.check_treatment(w)?;
        let n = x.nrows();
        let s_col = Array1::from_elem(n, s);
        let rep = self.representation(x, &s_col)?;
        match &self.heads[w] {
            OutcomeHead::VcNet { hidden, out } => {
                // materialize theta(s) once, then run a plain linear pass
                let psi = self.basis.eval(s)?;
                let mut input = Array2::zeros((n, rep.ncols() + 1));
                input.slice_mut(ndarray::s![.., ..rep.ncols()]).assign(&rep);
                input.column_mut(rep.ncols()).fill(s);
                let (w1, b1) = self.vc_weight_at(hidden, &psi);
                let mut h = input.dot(&w1);
                h += &b1.broadcast(h.dim()).expect("bias broadcast");
                let h = h.mapv(elu_scalar);
                let (w2, b2) = self.vc_weight_at(out, &psi);
                let mut o = h.dot(&w2);
                o += &b2.broadcast(o.dim()).expect("bias broadcast");
                Ok(o.column(0).to_owned())
            }
            _ => {
                let s_rows = vec![s; n];
                self.head_forward_plain(w, &rep, &s_rows)
            }
        }
    }

    /// Propensity density value p(s | x) per row, under the piecewise-constant
    /// bin model.
    pub fn propensity_density(
        &self,
        rep: &Array2<F>,
        s: &Array1<F>,
    ) -> Result<Array1<F>, ModelError> {
        let lin = self.propensity.ok_or(ModelError::MissingPropensityHead)?;
        let bins = self.params.get(lin.w).ncols();
        let logits = self.linear_plain(lin, rep);
        let probs = softmax_array(&logits, 1);
        let mut out = Array1::zeros(rep.nrows());
        for i in 0..rep.nrows() {
            let b = bin_index(s[i].widen(), bins);
            out[i] = probs[[i, b]] * F::of(bins as f64);
        }
        Ok(out)
    }

    // ---- tape (training) path ----

    /// Register every parameter as a tape leaf.
    pub fn bind(&self, tape: &mut Tape<F>) -> BoundModel {
        BoundModel {
            vars: self
                .params
                .values()
                .iter()
                .map(|v| tape.leaf(v.clone()))
                .collect(),
        }
    }

    fn linear_tape(
        &self,
        tape: &mut Tape<F>,
        bound: &BoundModel,
        lin: Linear,
        input: Var,
    ) -> Result<Var, ModelError> {
        let z = tape.matmul(input, bound.var(lin.w))?;
        let (n, c) = tape.shape(z);
        let b = tape.broadcast(bound.var(lin.b), n, c)?;
        Ok(tape.add(z, b)?)
    }

    fn vc_tape(
        &self,
        tape: &mut Tape<F>,
        bound: &BoundModel,
        vc: &VcLinear,
        input: Var,
        p: Var,
    ) -> Result<Var, ModelError> {
        let mut acc = tape.matmul(p, bound.var(vc.bias))?;
        let (n, out_dim) = tape.shape(acc);
        for (l, alpha) in vc.alphas.iter().enumerate() {
            let zl = tape.matmul(input, bound.var(*alpha))?;
            let pl = tape.slice(p, 1, l, l + 1)?;
            let plb = tape.broadcast(pl, n, out_dim)?;
            let term = tape.mul(plb, zl)?;
            acc = tape.add(acc, term)?;
        }
        Ok(acc)
    }

    /// Tape representation of a batch; `x` must already carry the dosage
    /// column for the MLP architecture (see [`NetworkModel::rep_input`]).
    pub fn representation_tape(
        &self,
        tape: &mut Tape<F>,
        bound: &BoundModel,
        input: Var,
    ) -> Result<Var, ModelError> {
        let z0 = self.linear_tape(tape, bound, self.rep[0], input)?;
        let h0 = tape.elu(z0)?;
        let z1 = self.linear_tape(tape, bound, self.rep[1], h0)?;
        Ok(tape.elu(z1)?)
    }

    /// Assemble the representation input matrix for a batch (adds the dosage
    /// column for the MLP).
    pub fn rep_input(&self, x: &Array2<F>, s: &Array1<F>) -> Array2<F> {
        match self.config.arch {
            Arch::Mlp => {
                let mut m = Array2::zeros((x.nrows(), x.ncols() + 1));
                m.slice_mut(ndarray::s![.., ..x.ncols()]).assign(x);
                for i in 0..x.nrows() {
                    m[[i, x.ncols()]] = s[i];
                }
                m
            }
            _ => x.clone(),
        }
    }

    /// Tape outcome predictions for a batch whose rows were sorted into
    /// contiguous `groups`; each sample flows only through its own
    /// treatment's head while the shared representation sees all rows.
    pub fn outcome_tape(
        &self,
        tape: &mut Tape<F>,
        bound: &BoundModel,
        rep: Var,
        s_col: Var,
        groups: &BatchGroups,
    ) -> Result<Var, ModelError> {
        let mut parts = Vec::with_capacity(groups.spans.len());
        for span in &groups.spans {
            self.check_treatment(span.w)?;
            let r_g = tape.slice(rep, 0, span.start, span.end)?;
            let s_g = tape.slice(s_col, 0, span.start, span.end)?;
            let part = match &self.heads[span.w] {
                OutcomeHead::Mlp { hidden, out } => {
                    let z = self.linear_tape(tape, bound, *hidden, r_g)?;
                    let h = tape.elu(z)?;
                    self.linear_tape(tape, bound, *out, h)?
                }
                OutcomeHead::DrNet { bins } => {
                    let input = tape.concat(&[r_g, s_g], 1)?;
                    let (hidden, out) = &bins[span.bin];
                    let z = self.linear_tape(tape, bound, *hidden, input)?;
                    let h = tape.elu(z)?;
                    self.linear_tape(tape, bound, *out, h)?
                }
                OutcomeHead::VcNet { hidden, out } => {
                    let input = tape.concat(&[r_g, s_g], 1)?;
                    let p = basis_matrix_var(tape, &self.basis, s_g)?;
                    let z = self.vc_tape(tape, bound, hidden, input, p)?;
                    let h = tape.elu(z)?;
                    self.vc_tape(tape, bound, out, h, p)?
                }
            };
            parts.push(part);
        }
        Ok(tape.concat(&parts, 0)?)
    }

    /// Tape propensity density column for observed dosages.
    pub fn propensity_density_tape(
        &self,
        tape: &mut Tape<F>,
        bound: &BoundModel,
        rep: Var,
        s: &[F],
    ) -> Result<Var, ModelError> {
        let lin = self.propensity.ok_or(ModelError::MissingPropensityHead)?;
        let bins = self.params.get(lin.w).ncols();
        let logits = self.linear_tape(tape, bound, lin, rep)?;
        let probs = tape.softmax(logits, 1)?;
        let mut onehot = Array2::zeros((s.len(), bins));
        for (i, &si) in s.iter().enumerate() {
            onehot[[i, bin_index(si.widen(), bins)]] = F::one();
        }
        let mask = tape.leaf(onehot);
        let picked = tape.mul(probs, mask)?;
        let ones = tape.leaf(Array2::ones((bins, 1)));
        let prob_col = tape.matmul(picked, ones)?;
        Ok(tape.scale(prob_col, F::of(bins as f64))?)
    }
}
