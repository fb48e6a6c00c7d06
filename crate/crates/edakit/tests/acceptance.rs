//! Acceptance suite: every release criterion as one test, each printed
//! as a pass/fail line with its runtime. Criteria marked with runtime
//! budgets assert them. Tests serialize on a global lock so the
//! budgets reflect single-job execution.
//!
//! Run with `cargo test -p edakit --test acceptance -- --nocapture`.

mod oracle;

use std::sync::Mutex;
use std::time::{Duration, Instant};

use edakit::decompose::basis::{bateman_stencils, drift_columns, spline_basis};
use edakit::decompose::{cvxeda, CvxedaParams};
use edakit::encoder::tensor::{Tensor2, Tensor3};
use edakit::encoder::{embed_windows, Encoder, EncoderConfig};
use edakit::eval::{
    dummy_best, friedman_nemenyi, make_folds, mean_se, metrics, metrics_bool,
    paired_ttest_bonferroni, Protocol, TA_FOLDS,
};
use edakit::probe::{grid_select, penalized_loss, ProbeGrid};
use edakit::rng::stream_rng;
use edakit::segment::{Window, WindowMeta, CHANNELS, WINDOW_SAMPLES};
use edakit::signal::Series;
use edakit::synth::{synth_series, synth_window, two_class_windows, SynthParams};
use edakit::train::{fit_contrastive, info_nce, two_view_pairing, ContrastiveConfig};

use oracle::{naive_channel_features, solve_qp_ipm, Dense};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn pass(name: &str, t0: Instant, detail: String) {
    println!("ACCEPT {name}: pass in {:.2?} — {detail}", t0.elapsed());
}

fn budget(name: &str, t0: Instant, limit: Duration) {
    let took = t0.elapsed();
    assert!(
        took <= limit,
        "{name} exceeded its runtime budget: {took:.2?} > {limit:.2?}"
    );
}

// -------------------------------------------------------------------
// 1. Contrastive loss exactness.
// -------------------------------------------------------------------
#[test]
fn criterion_01_info_nce_exactness() {
    let _g = serial();
    let t0 = Instant::now();

    // N = 2 orthogonal clusters: per-anchor loss log(1 + 2 e^-10).
    let mut emb = Tensor2::<f64>::zeros(4, 2);
    for (i, row) in [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]].iter().enumerate() {
        emb.row_mut(i).copy_from_slice(row);
    }
    let loss = info_nce(&emb, &two_view_pairing(2), 0.1).unwrap();
    let want = (1.0 + 2.0 * (-10.0f64).exp()).ln();
    assert!((loss - want).abs() < 1e-9, "loss {loss}, want {want}");

    // N = 1: exactly zero.
    let mut one = Tensor2::<f64>::zeros(2, 3);
    one.row_mut(0).copy_from_slice(&[0.3, -0.1, 0.9]);
    one.row_mut(1).copy_from_slice(&[-0.5, 0.2, 0.1]);
    assert_eq!(info_nce(&one, &[1, 0], 0.1).unwrap(), 0.0);

    // Scale invariance at c in {0.1, 10}.
    use rand::Rng;
    let mut rng = stream_rng(1001, 0);
    let mut z = Tensor2::<f64>::zeros(8, 16);
    for v in &mut z.data {
        *v = rng.random_range(-1.0..1.0);
    }
    let pairing = two_view_pairing(4);
    let base = info_nce(&z, &pairing, 0.1).unwrap();
    for c in [0.1, 10.0] {
        let mut scaled = z.clone();
        for v in &mut scaled.data {
            *v *= c;
        }
        let s = info_nce(&scaled, &pairing, 0.1).unwrap();
        assert!((s - base).abs() <= 1e-6 * base.abs(), "c={c}: {s} vs {base}");
    }

    budget("criterion 1", t0, Duration::from_secs(1));
    pass("01 info-nce exactness", t0, format!("orthogonal-pair loss {loss:.6e}"));
}

// -------------------------------------------------------------------
// 2. Gradient correctness for the encoder and the probe loss.
// -------------------------------------------------------------------
#[test]
fn criterion_02_gradient_correctness() {
    let _g = serial();
    let t0 = Instant::now();
    use rand::Rng;

    // Encoder: tiny two-block config, every parameter against central
    // finite differences in f64 (fourth-order stencil, h relative).
    let cfg = EncoderConfig {
        stem_channels: 4,
        mbconv_channels: 4,
        num_blocks: 2,
        head_channels: 6,
        embedding_dim: 4,
        kernel_size: 9,
        dropout: 0.0,
        stride_blocks: vec![2],
        ..EncoderConfig::tiny()
    };
    let mut rng = stream_rng(2002, 0);
    let mut x = Tensor3::<f64>::zeros(4, CHANNELS, WINDOW_SAMPLES);
    for v in &mut x.data {
        *v = rng.random_range(0.1..1.5);
    }
    let mut enc = Encoder::<f64>::new(cfg, 3).unwrap();
    let emb_dim = enc.config.embedding_dim;
    let proj: Vec<f64> = (0..4 * emb_dim)
        .map(|i| ((i * 31 % 13) as f64 - 6.0) / 9.0)
        .collect();
    let loss_of = |enc: &mut Encoder<f64>, x: &Tensor3<f64>| -> f64 {
        let mut dr = stream_rng(0, 0);
        let emb = enc.forward_train(x, &mut dr).unwrap();
        let mut s = 0.0;
        for r in 0..emb.r {
            for c in 0..emb.c {
                s += emb.row(r)[c] * proj[r * emb.c + c];
            }
        }
        s
    };

    enc.zero_grad();
    {
        let mut dr = stream_rng(0, 0);
        let emb = enc.forward_train(&x, &mut dr).unwrap();
        let mut g = Tensor2::<f64>::zeros(emb.r, emb.c);
        for r in 0..emb.r {
            for c in 0..emb.c {
                g.row_mut(r)[c] = proj[r * emb.c + c];
            }
        }
        enc.backward(&g).unwrap();
    }
    let analytic: Vec<Vec<f64>> = enc.params_mut().iter().map(|p| p.grad.clone()).collect();

    let mut max_rel_enc: f64 = 0.0;
    let n_params = analytic.len();
    for pi in 0..n_params {
        let plen = analytic[pi].len();
        for k in 0..plen {
            let orig = enc.params_mut()[pi].data[k];
            let h = 1e-3 * orig.abs().max(1e-3);
            let mut eval = |enc: &mut Encoder<f64>, v: f64| {
                enc.params_mut()[pi].data[k] = v;
                loss_of(enc, &x)
            };
            let fp1 = eval(&mut enc, orig + h);
            let fp2 = eval(&mut enc, orig + 2.0 * h);
            let fm1 = eval(&mut enc, orig - h);
            let fm2 = eval(&mut enc, orig - 2.0 * h);
            enc.params_mut()[pi].data[k] = orig;
            let fd = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
            let an = analytic[pi][k];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
            max_rel_enc = max_rel_enc.max(rel);
        }
    }
    assert!(max_rel_enc < 1e-3, "encoder max rel {max_rel_enc}");

    // Logistic-regression loss gradient, f64, < 1e-5 relative.
    let n = 30;
    let d = 6;
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let ys: Vec<bool> = (0..n).map(|i| i % 3 != 0).collect();
    let mut theta: Vec<f64> = (0..d + 1).map(|_| rng.random_range(-0.5..0.5)).collect();
    let (_, grad) = penalized_loss(&xs, &ys, 0.7, &theta);
    let mut max_rel_lr: f64 = 0.0;
    for i in 0..theta.len() {
        let orig = theta[i];
        let h = 1e-6 * orig.abs().max(1.0);
        theta[i] = orig + h;
        let (up, _) = penalized_loss(&xs, &ys, 0.7, &theta);
        theta[i] = orig - h;
        let (down, _) = penalized_loss(&xs, &ys, 0.7, &theta);
        theta[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-9);
        max_rel_lr = max_rel_lr.max(rel);
    }
    assert!(max_rel_lr < 1e-5, "logreg max rel {max_rel_lr}");

    budget("criterion 2", t0, Duration::from_secs(120));
    pass(
        "02 gradient correctness",
        t0,
        format!("encoder rel {max_rel_enc:.2e}, logreg rel {max_rel_lr:.2e}"),
    );
}

// -------------------------------------------------------------------
// 3. Decomposition vs an independent interior-point solver.
// -------------------------------------------------------------------

/// Dense statement of the decomposition QP for the oracle.
struct DenseQp {
    p: Dense,
    f: Vec<f64>,
    g: Dense,
    h: Vec<f64>,
    fmat: Dense, // [M B C]
    a_mat: Dense,
    nb: usize,
    alpha: f64,
    gamma: f64,
    y: Vec<f64>,
}

fn assemble_dense_qp(y: &[f64], params: &CvxedaParams) -> DenseQp {
    let n = y.len();
    let delta = 1.0 / 4.0;
    let (ar, ma) = bateman_stencils(params.tau0_s, params.tau1_s, delta);
    let knot = (params.knot_spacing_s * 4.0).round() as usize;
    let b_cols = spline_basis(n, knot);
    let drift = drift_columns(n);
    let nb = b_cols.len();
    let nv = n + nb + 2;

    // Dense A and M via unit vectors through the stencils.
    let mut a_mat = Dense::zeros(n, n);
    let mut m_mat = Dense::zeros(n, n);
    let mut unit = vec![0.0; n];
    let mut out = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        ar.apply(&unit, &mut out);
        for i in 0..n {
            a_mat.set(i, j, out[i]);
        }
        ma.apply(&unit, &mut out);
        for i in 0..n {
            m_mat.set(i, j, out[i]);
        }
        unit[j] = 0.0;
    }

    // F = [M B C].
    let mut fmat = Dense::zeros(n, nv);
    for j in 0..n {
        for i in 0..n {
            fmat.set(i, j, m_mat.at(i, j));
        }
    }
    for (k, col) in b_cols.iter().enumerate() {
        let mut dense = vec![0.0; n];
        col.axpy(1.0, &mut dense);
        for i in 0..n {
            fmat.set(i, n + k, dense[i]);
        }
    }
    for (k, col) in drift.iter().enumerate() {
        for i in 0..n {
            fmat.set(i, n + nb + k, col[i]);
        }
    }

    // P = F'F + gamma on the spline block.
    let mut p = Dense::zeros(nv, nv);
    for a in 0..nv {
        for b in a..nv {
            let mut s = 0.0;
            for i in 0..n {
                s += fmat.at(i, a) * fmat.at(i, b);
            }
            p.set(a, b, s);
            p.set(b, a, s);
        }
    }
    for k in 0..nb {
        let v = p.at(n + k, n + k) + params.gamma;
        p.set(n + k, n + k, v);
    }

    // f = [alpha * 1'A - M'y; -B'y; -C'y].
    let mut f = vec![0.0; nv];
    for j in 0..n {
        let mut colsum = 0.0;
        let mut mty = 0.0;
        for i in 0..n {
            colsum += a_mat.at(i, j);
            mty += m_mat.at(i, j) * y[i];
        }
        f[j] = params.alpha * colsum - mty;
    }
    for (k, col) in b_cols.iter().enumerate() {
        f[n + k] = -col.dot(y);
    }
    for (k, col) in drift.iter().enumerate() {
        f[n + nb + k] = -col.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    }

    // Constraint A q >= 0 as (-A)x <= 0.
    let mut g = Dense::zeros(n, nv);
    for i in 0..n {
        for j in 0..n {
            g.set(i, j, -a_mat.at(i, j));
        }
    }

    DenseQp {
        p,
        f,
        g,
        h: vec![0.0; n],
        fmat,
        a_mat,
        nb,
        alpha: params.alpha,
        gamma: params.gamma,
        y: y.to_vec(),
    }
}

impl DenseQp {
    fn objective(&self, x: &[f64]) -> f64 {
        let model = self.fmat.matvec(x);
        let resid: f64 = model
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let n = self.y.len();
        let aq = self.a_mat.matvec(&x[..n]);
        let l1: f64 = aq.iter().map(|v| v.abs()).sum();
        let ridge: f64 = x[n..n + self.nb].iter().map(|v| v * v).sum();
        0.5 * resid + self.alpha * l1 + 0.5 * self.gamma * ridge
    }
}

#[test]
fn criterion_03_decomposition_oracle_equivalence() {
    let _g = serial();
    let t0 = Instant::now();
    let params = CvxedaParams::default();

    use rand::Rng;
    let mut worst_rel: f64 = 0.0;
    for rep in 0..20 {
        let mut rng = stream_rng(3003, rep);
        let pulses = rng.random_range(1..=3);
        let y = synth_series(WINDOW_SAMPLES, pulses, 0.01, 3100 + rep);
        let series = Series::new(y.clone()).unwrap();
        let sol = cvxeda(&series, &params).unwrap();

        // Driver nonnegativity at the numeric floor.
        let min_driver = sol
            .decomposition
            .driver
            .iter()
            .cloned()
            .fold(f64::MAX, f64::min);
        assert!(min_driver >= -1e-8, "rep {rep}: min driver {min_driver}");

        // Oracle solve of the same program.
        let qp = assemble_dense_qp(&y, &params);
        let x_oracle = solve_qp_ipm(&qp.p, &qp.f, &qp.g, &qp.h);
        let obj_oracle = qp.objective(&x_oracle);
        let obj_ours = sol.info.objective;
        let rel = (obj_ours - obj_oracle).abs() / obj_oracle.abs().max(1e-12);
        worst_rel = worst_rel.max(rel);
        assert!(
            rel <= 1e-4,
            "rep {rep}: objective {obj_ours} vs oracle {obj_oracle} (rel {rel:.3e})"
        );
    }

    // Affine ramp: representable by the drift basis, so the driver
    // stays numerically silent.
    let ramp: Vec<f64> = (0..WINDOW_SAMPLES).map(|i| 0.9 + 0.004 * i as f64).collect();
    let sol = cvxeda(&Series::new(ramp).unwrap(), &params).unwrap();
    let max_driver = sol.decomposition.driver.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max_driver < 1e-4, "ramp max driver {max_driver}");

    budget("criterion 3", t0, Duration::from_secs(300));
    pass(
        "03 decomposition oracle equivalence",
        t0,
        format!("worst objective rel {worst_rel:.3e}, ramp driver {max_driver:.2e}"),
    );
}

// -------------------------------------------------------------------
// 4. Handcrafted features vs brute-force reimplementation.
// -------------------------------------------------------------------
#[test]
fn criterion_04_feature_oracle() {
    let _g = serial();
    let t0 = Instant::now();
    use edakit::features::{eda_features, generic_features, FeatureSet};
    use edakit::segment::ALL_CHANNELS;

    assert_eq!(FeatureSet::Generic.dim(), 12);
    assert_eq!(FeatureSet::EdaSpecific.dim(), 45);

    let mut worst_rel: f64 = 0.0;
    for rep in 0..100 {
        let w = synth_window(
            &SynthParams::default(),
            "oracle",
            "synthetic",
            rep as f64,
            4000 + rep as u64,
        );
        let got = eda_features(&w);
        assert_eq!(got.values.len(), 45);
        assert_eq!(generic_features(&w).values.len(), 12);
        for (ci, ch) in ALL_CHANNELS.iter().enumerate() {
            let want = naive_channel_features(w.channel(*ch));
            for (k, (a, b)) in got.values[ci * 15..(ci + 1) * 15].iter().zip(&want).enumerate() {
                let rel = (a - b).abs() / b.abs().max(1e-12);
                worst_rel = worst_rel.max(rel);
                assert!(
                    rel <= 1e-9,
                    "rep {rep} channel {ci} feature {k}: {a} vs {b} (rel {rel:.3e})"
                );
            }
        }
    }

    budget("criterion 4", t0, Duration::from_secs(30));
    pass("04 feature oracle", t0, format!("worst rel {worst_rel:.3e} over 100 windows"));
}

// -------------------------------------------------------------------
// 5. Augmentation invariants.
// -------------------------------------------------------------------
#[test]
fn criterion_05_augmentation_invariants() {
    let _g = serial();
    let t0 = Instant::now();
    use edakit::augment::{apply, sample_spec, AugKind, AugParams, AugmentationSpec, ALL_KINDS};

    let w = synth_window(&SynthParams::default(), "aug", "synthetic", 0.0, 505);

    // Flip involution, bit exact.
    let flip = AugmentationSpec { kind: AugKind::Flip, params: AugParams::Flip, seed: 0 };
    let twice = apply(&apply(&w, &flip).unwrap(), &flip).unwrap();
    assert_eq!(w.samples(), twice.samples());

    // Cutout of 5 s zeroes exactly 20 samples per channel.
    let cut = AugmentationSpec {
        kind: AugKind::Cutout,
        params: AugParams::Cutout { start: 77, len: 20 },
        seed: 0,
    };
    let cut_w = apply(&w, &cut).unwrap();
    for c in edakit::segment::ALL_CHANNELS {
        let (orig, cut_ch) = (w.channel(c), cut_w.channel(c));
        for i in 0..WINDOW_SAMPLES {
            if (77..97).contains(&i) {
                assert_eq!(cut_ch[i], 0.0, "in-span sample {i} not zeroed");
            } else {
                assert_eq!(cut_ch[i].to_bits(), orig[i].to_bits(), "sample {i} touched");
            }
        }
    }

    // Permutation preserves per-channel multisets exactly.
    let perm = AugmentationSpec {
        kind: AugKind::Permutation,
        params: AugParams::Permutation { order: vec![3, 1, 0, 2] },
        seed: 0,
    };
    let p_w = apply(&w, &perm).unwrap();
    for c in edakit::segment::ALL_CHANNELS {
        let mut a: Vec<u64> = w.channel(c).iter().map(|v| v.to_bits()).collect();
        let mut b: Vec<u64> = p_w.channel(c).iter().map(|v| v.to_bits()).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    // 10k seeded draws: all 18 kinds appear, outputs stay 3x240 finite.
    let mut rng = stream_rng(5005, 0);
    let mut seen = std::collections::HashSet::new();
    for _ in 0..10_000 {
        let spec = sample_spec(&mut rng);
        seen.insert(spec.kind);
        let out = apply(&w, &spec).unwrap();
        assert_eq!(out.samples().len(), CHANNELS * WINDOW_SAMPLES);
        assert!(out.is_finite());
    }
    assert_eq!(seen.len(), ALL_KINDS.len());

    budget("criterion 5", t0, Duration::from_secs(60));
    pass("05 augmentation invariants", t0, format!("{} kinds over 10k draws", seen.len()));
}

// -------------------------------------------------------------------
// 6. Cross-validation plan invariants on randomized metadata.
// -------------------------------------------------------------------
#[test]
fn criterion_06_cv_plan_invariants() {
    let _g = serial();
    let t0 = Instant::now();
    use rand::Rng;

    for rep in 0..1000u64 {
        let mut rng = stream_rng(6006, rep);
        let n_users = rng.random_range(5..12);
        let mut metas: Vec<WindowMeta> = Vec::new();
        for u in 0..n_users {
            let n_w = rng.random_range(2..30);
            let mut t = rng.random_range(0.0..1e6);
            for _ in 0..n_w {
                // Occasional duplicate timestamps stress the strict
                // chronological boundary; the first five users stay
                // strictly increasing so at least five users survive
                // the exclusion rule.
                if u >= 5 && !metas.is_empty() && rng.random::<f64>() < 0.1 {
                    // keep t unchanged
                } else {
                    t += rng.random_range(0.25..600.0);
                }
                metas.push(WindowMeta {
                    user_id: format!("u{u}"),
                    dataset_id: "ds".into(),
                    t_start: t,
                    label: Some(rng.random::<f64>() < 0.5),
                });
            }
        }

        // LOPO: user-disjoint folds covering all windows exactly once.
        let lopo = make_folds(&metas, Protocol::Lopo, rep).unwrap();
        let mut covered: Vec<usize> = Vec::new();
        for fold in &lopo.folds {
            let test_users: std::collections::HashSet<&str> =
                fold.test.iter().map(|&i| metas[i].user_id.as_str()).collect();
            assert_eq!(test_users.len(), 1, "rep {rep}");
            let train_users: std::collections::HashSet<&str> =
                fold.train.iter().map(|&i| metas[i].user_id.as_str()).collect();
            assert!(train_users.is_disjoint(&test_users), "rep {rep}");
            covered.extend(&fold.test);
        }
        covered.sort_unstable();
        assert_eq!(covered, (0..metas.len()).collect::<Vec<_>>(), "rep {rep}");

        // TA: 5 folds, strict per-user chronology inside every fold.
        match make_folds(&metas, Protocol::TimeAware, rep) {
            Err(e) => panic!("rep {rep}: TA plan failed: {e}"),
            Ok(ta) => {
                assert_eq!(ta.folds.len(), TA_FOLDS, "rep {rep}");
                for fold in &ta.folds {
                    let test_users: std::collections::HashSet<&str> =
                        fold.test.iter().map(|&i| metas[i].user_id.as_str()).collect();
                    for u in test_users {
                        let max_train = fold
                            .train
                            .iter()
                            .filter(|&&i| metas[i].user_id == u)
                            .map(|&i| metas[i].t_start)
                            .fold(f64::MIN, f64::max);
                        let min_test = fold
                            .test
                            .iter()
                            .filter(|&&i| metas[i].user_id == u)
                            .map(|&i| metas[i].t_start)
                            .fold(f64::MAX, f64::min);
                        assert!(
                            max_train < min_test,
                            "rep {rep} user {u}: {max_train} !< {min_test}"
                        );
                    }
                    // No index in both sides.
                    let tr: std::collections::HashSet<usize> =
                        fold.train.iter().copied().collect();
                    assert!(fold.test.iter().all(|i| !tr.contains(i)), "rep {rep}");
                }
            }
        }
    }

    budget("criterion 6", t0, Duration::from_secs(60));
    pass("06 cv plan invariants", t0, "1000 randomized metadata instances".into());
}

// -------------------------------------------------------------------
// 7. Metrics and rank statistics.
// -------------------------------------------------------------------
#[test]
fn criterion_07_metrics_and_stats() {
    let _g = serial();
    let t0 = Instant::now();
    use rand::Rng;

    // Confusion metrics against brute force on 1000 random vectors.
    for rep in 0..1000u64 {
        let mut rng = stream_rng(7007, rep);
        let n = rng.random_range(2..60);
        let y_true: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        let y_pred: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        let m = metrics(&y_true, &y_pred).unwrap();

        let tp = y_true.iter().zip(&y_pred).filter(|(t, p)| **t == 1 && **p == 1).count() as f64;
        let tn = y_true.iter().zip(&y_pred).filter(|(t, p)| **t == 0 && **p == 0).count() as f64;
        let fp = y_true.iter().zip(&y_pred).filter(|(t, p)| **t == 0 && **p == 1).count() as f64;
        let fn_ = y_true.iter().zip(&y_pred).filter(|(t, p)| **t == 1 && **p == 0).count() as f64;
        let mut rates = vec![];
        if tp + fn_ > 0.0 {
            rates.push(tp / (tp + fn_));
        }
        if tn + fp > 0.0 {
            rates.push(tn / (tn + fp));
        }
        let ba = rates.iter().sum::<f64>() / rates.len() as f64;
        let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        let mcc = if denom == 0.0 { 0.0 } else { (tp * tn - fp * fn_) / denom.sqrt() };
        let f1d = 2.0 * tp + fp + fn_;
        let f1 = if f1d == 0.0 { 0.0 } else { 2.0 * tp / f1d };
        assert!((m.balanced_accuracy - ba).abs() < 1e-12);
        assert!((m.mcc - mcc).abs() < 1e-12);
        assert!((m.f1 - f1).abs() < 1e-12);
    }

    // Friedman identical-ranking closed form (k = 3, n = 5).
    let scores = vec![
        vec![0.9, 0.8, 0.95, 0.7, 0.85],
        vec![0.6, 0.5, 0.65, 0.4, 0.55],
        vec![0.3, 0.2, 0.35, 0.1, 0.25],
    ];
    let fr = friedman_nemenyi(&scores).unwrap();
    assert!((fr.chi2 - 10.0).abs() < 1e-12);
    assert!((fr.p_value - (-5.0f64).exp()).abs() < 1e-9, "p {}", fr.p_value);

    // Bonferroni scaling identity.
    let a = [0.72, 0.69, 0.77, 0.8, 0.7];
    let b = [0.6, 0.63, 0.66, 0.71, 0.64];
    let p1 = paired_ttest_bonferroni(&a, &b, 1).unwrap();
    let p5 = paired_ttest_bonferroni(&a, &b, 5).unwrap();
    assert!((p5 - (5.0 * p1).min(1.0)).abs() < 1e-12);

    budget("criterion 7", t0, Duration::from_secs(30));
    pass("07 metrics and stats", t0, format!("friedman p {:.6e}", fr.p_value));
}

// -------------------------------------------------------------------
// 8. Model shape, size and exact FLOP count.
// -------------------------------------------------------------------

/// Independent per-layer FLOP tally, written directly from the
/// documented conventions (MAC = 2 FLOPs; elementwise and pooling ops
/// 1 FLOP per element) and the architecture description.
fn spreadsheet_flops(cfg: &EncoderConfig) -> u64 {
    let conv = |out_len: usize, oc: usize, icg: usize, k: usize| -> u64 {
        2 * (out_len * oc * icg * k) as u64
    };
    let linear = |i: usize, o: usize| -> u64 { 2 * (i * o) as u64 };
    let k = cfg.kernel_size;
    let pad = k / 2;
    let out_len = |l: usize, s: usize| (l + 2 * pad - k) / s + 1;

    let mut total = 0u64;
    // Stem: conv stride 2 + BN + SiLU.
    let mut l = out_len(cfg.input_len, 2);
    total += conv(l, cfg.stem_channels, cfg.in_channels, k);
    total += 2 * (cfg.stem_channels * l) as u64;

    let mid = cfg.mbconv_channels * cfg.expansion;
    let se_ch = ((mid as f64 * cfg.se_ratio).round() as usize).max(1);
    let mut in_ch = cfg.stem_channels;
    for b in 1..=cfg.num_blocks {
        let stride = if cfg.stride_blocks.contains(&b) { 2 } else { 1 };
        let l_in = l;
        let l_out = out_len(l_in, stride);
        // expand 1x1 + BN + SiLU
        total += conv(l_in, mid, in_ch, 1) + 2 * (mid * l_in) as u64;
        // depthwise k + BN + SiLU
        total += conv(l_out, mid, 1, k) + 2 * (mid * l_out) as u64;
        // SE: pool + squeeze linear + act + excite linear + gate + scale
        total += (mid * l_out) as u64;
        total += linear(mid, se_ch) + se_ch as u64;
        total += linear(se_ch, mid) + mid as u64;
        total += (mid * l_out) as u64;
        // project 1x1 + BN
        total += conv(l_out, cfg.mbconv_channels, mid, 1);
        total += (cfg.mbconv_channels * l_out) as u64;
        // residual add
        if stride == 1 && in_ch == cfg.mbconv_channels {
            total += (cfg.mbconv_channels * l_out) as u64;
        }
        in_ch = cfg.mbconv_channels;
        l = l_out;
    }

    // Head: conv 1x1 + BN + SiLU + pool + fc.
    total += conv(l, cfg.head_channels, cfg.mbconv_channels, 1);
    total += 2 * (cfg.head_channels * l) as u64;
    total += (cfg.head_channels * l) as u64;
    total += linear(cfg.head_channels, cfg.embedding_dim);
    total
}

#[test]
fn criterion_08_model_shape_size_flops() {
    let _g = serial();
    let t0 = Instant::now();
    use rand::Rng;

    let cfg = EncoderConfig::reference();
    let mut enc = Encoder::<f32>::new(cfg.clone(), 1).unwrap();
    let mut rng = stream_rng(8008, 0);
    let mut x = Tensor3::<f32>::zeros(2, CHANNELS, WINDOW_SAMPLES);
    for v in &mut x.data {
        *v = rng.random_range(0.0..1.0);
    }
    let emb = enc.forward_eval(&x).unwrap();
    assert_eq!((emb.r, emb.c), (2, 64));

    let n_params = enc.param_count();
    assert!(
        (800_000..=1_300_000).contains(&n_params),
        "parameter count {n_params}"
    );

    let counted = edakit::bench::count_flops(&cfg);
    let spreadsheet = spreadsheet_flops(&cfg);
    assert_eq!(counted, spreadsheet, "FLOP count {counted} vs tally {spreadsheet}");

    budget("criterion 8", t0, Duration::from_secs(10));
    pass(
        "08 model shape/size",
        t0,
        format!("{n_params} params, {counted} FLOPs/window"),
    );
}

// -------------------------------------------------------------------
// 9. Synthetic end-to-end: train, embed, probe.
// -------------------------------------------------------------------

struct E2eOutcome {
    probe_ba: f64,
    dummy_ba: f64,
    generic_ba: f64,
    train_secs: f64,
    embedding_bytes: Vec<u8>,
}

fn run_end_to_end(seed: u64) -> E2eOutcome {
    let windows = two_class_windows(2000, 10, 909);
    let metas: Vec<WindowMeta> = windows.iter().map(WindowMeta::from).collect();

    let cfg = ContrastiveConfig {
        batch_size: 64,
        max_epochs: 8,
        lr: 1e-3,
        seed,
        ..ContrastiveConfig::default()
    };
    let mut enc = Encoder::<f32>::new(EncoderConfig::tiny(), seed).unwrap();
    let t_train = Instant::now();
    let report = fit_contrastive(&windows, &cfg, &mut enc).unwrap();
    let train_secs = t_train.elapsed().as_secs_f64();
    assert!(!report.epochs.is_empty());

    let embeddings = embed_windows(&mut enc, &windows, 256).unwrap();
    let embedding_bytes: Vec<u8> = embeddings
        .iter()
        .flat_map(|e| e.iter().flat_map(|v| v.to_le_bytes()))
        .collect();
    let emb_rows: Vec<Vec<f64>> = embeddings
        .iter()
        .map(|e| e.iter().map(|v| *v as f64).collect())
        .collect();

    let plan = make_folds(&metas, Protocol::Lopo, seed).unwrap();
    let grid = ProbeGrid::default();

    let probe_fold_bas = |rows: &[Vec<f64>]| -> (Vec<f64>, Vec<f64>) {
        let mut bas = Vec::new();
        let mut dummies = Vec::new();
        for (fi, fold) in plan.folds.iter().enumerate() {
            let x_tr: Vec<Vec<f64>> = fold.train.iter().map(|&i| rows[i].clone()).collect();
            let y_tr: Vec<bool> = fold.train.iter().map(|&i| metas[i].label.unwrap()).collect();
            let x_te: Vec<Vec<f64>> = fold.test.iter().map(|&i| rows[i].clone()).collect();
            let y_te: Vec<bool> = fold.test.iter().map(|&i| metas[i].label.unwrap()).collect();
            let (model, _) = grid_select(&x_tr, &y_tr, &grid, 3, seed ^ fi as u64).unwrap();
            let preds: Vec<bool> = x_te.iter().map(|r| model.predict(r)).collect();
            bas.push(metrics_bool(&y_te, &preds).unwrap().balanced_accuracy);
            let y_tr_u8: Vec<u8> = y_tr.iter().map(|v| *v as u8).collect();
            let y_te_u8: Vec<u8> = y_te.iter().map(|v| *v as u8).collect();
            dummies.push(
                dummy_best(&y_tr_u8, &y_te_u8, seed ^ ((fi as u64) << 20))
                    .unwrap()
                    .balanced_accuracy,
            );
        }
        (bas, dummies)
    };

    let (emb_bas, emb_dummies) = probe_fold_bas(&emb_rows);
    let generic_rows: Vec<Vec<f64>> = windows
        .iter()
        .map(|w| edakit::features::generic_features(w).values)
        .collect();
    let (gen_bas, _) = probe_fold_bas(&generic_rows);

    E2eOutcome {
        probe_ba: mean_se(&emb_bas).0,
        dummy_ba: mean_se(&emb_dummies).0,
        generic_ba: mean_se(&gen_bas).0,
        train_secs,
        embedding_bytes,
    }
}

#[test]
fn criterion_09_synthetic_end_to_end() {
    let _g = serial();
    let t0 = Instant::now();

    let first = run_end_to_end(99);
    assert!(
        first.train_secs <= 30.0 * 60.0,
        "training took {:.1} s",
        first.train_secs
    );
    assert!(
        first.probe_ba >= 0.75,
        "probe balanced accuracy {:.4} below 0.75",
        first.probe_ba
    );
    assert!(
        first.probe_ba >= first.dummy_ba + 0.15,
        "probe {:.4} not 0.15 above dummy {:.4}",
        first.probe_ba,
        first.dummy_ba
    );
    assert!(
        first.generic_ba > first.dummy_ba,
        "generic features {:.4} vs dummy {:.4}",
        first.generic_ba,
        first.dummy_ba
    );

    // Bit-identical rerun.
    let second = run_end_to_end(99);
    assert_eq!(first.embedding_bytes, second.embedding_bytes);
    assert_eq!(first.probe_ba.to_bits(), second.probe_ba.to_bits());

    pass(
        "09 synthetic end-to-end",
        t0,
        format!(
            "probe BA {:.4}, dummy {:.4}, generic {:.4}, train {:.0} s",
            first.probe_ba, first.dummy_ba, first.generic_ba, first.train_secs
        ),
    );
}

// -------------------------------------------------------------------
// 10. Bench protocol and extractor ordering.
// -------------------------------------------------------------------
#[test]
fn criterion_10_bench_protocol() {
    let _g = serial();
    let t0 = Instant::now();
    use edakit::bench::{time_extractor, TIMED_RUNS, WARMUP_RUNS};
    use edakit::encoder::batch_from_windows;
    use edakit::features::{generic_features, EdaFeatureExtractor};

    assert_eq!(WARMUP_RUNS, 3);
    assert_eq!(TIMED_RUNS, 20);

    let windows: Vec<Window> = (0..WARMUP_RUNS + TIMED_RUNS)
        .map(|i| synth_window(&SynthParams::default(), "bench", "synthetic", i as f64, i as u64))
        .collect();

    let generic = time_extractor(
        "generic_hc",
        |w| {
            std::hint::black_box(generic_features(w));
        },
        &windows,
        None,
    )
    .unwrap();
    let ex = EdaFeatureExtractor::new();
    let eda = time_extractor(
        "eda_hc",
        |w| {
            std::hint::black_box(ex.extract(w));
        },
        &windows,
        None,
    )
    .unwrap();
    let mut enc = Encoder::<f32>::new(EncoderConfig::reference(), 0).unwrap();
    let model = time_extractor(
        "encoder",
        |w| {
            let x = batch_from_windows(&[w]);
            std::hint::black_box(enc.forward_eval(&x).unwrap());
        },
        &windows,
        None,
    )
    .unwrap();

    for e in [&generic, &eda, &model] {
        assert_eq!(e.n_warmup, 3);
        assert_eq!(e.n_samples, 20);
    }
    assert!(
        generic.mean_ms < eda.mean_ms && eda.mean_ms < model.mean_ms,
        "ordering violated: generic {:.4} ms, eda {:.4} ms, encoder {:.4} ms",
        generic.mean_ms,
        eda.mean_ms,
        model.mean_ms
    );

    pass(
        "10 bench protocol",
        t0,
        format!(
            "generic {:.4} ms < eda {:.4} ms < encoder {:.2} ms",
            generic.mean_ms, eda.mean_ms, model.mean_ms
        ),
    );
}
