//! Every differentiable tape op against central finite differences.

use hipgnn_core::autodiff::{check_gradients, AutodiffError, GradCheck, Selection, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;
const POINTS: u64 = 10;

/// Entries uniform in `[lo, hi]`, pushed out of `(-gap, gap)` so kinked
/// ops are never probed across their kink.
fn random(shape: &[usize], lo: f64, hi: f64, gap: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| loop {
            let v: f64 = rng.random_range(lo..hi);
            if v.abs() >= gap {
                break v;
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// `Σ c ⊙ out` with a fixed random `c`, so every output element matters.
fn project(tape: &mut Tape, out: Var, seed: u64) -> Result<Var, AutodiffError> {
    let shape = tape.shape(out).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FFEE);
    let c = tape.constant(random(&shape, -1.0, 1.0, 0.0, &mut rng));
    let prod = tape.mul(out, c)?;
    Ok(tape.sum(prod))
}

fn check_op<G, F>(name: &str, make_inputs: G, op: F)
where
    G: Fn(&mut ChaCha8Rng) -> Vec<Tensor>,
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    for point in 0..POINTS {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + point);
        let inputs = make_inputs(&mut rng);
        let report = check_gradients(
            &inputs,
            |tape, vars| {
                let out = op(tape, vars)?;
                project(tape, out, point)
            },
            &GradCheck::default(),
            Selection::All,
        )
        .unwrap();
        assert!(
            report.max_rel_error <= TOL,
            "{name} point {point}: rel error {} at {:?}",
            report.max_rel_error,
            report.worst
        );
    }
}

fn two(shape_a: &'static [usize], shape_b: &'static [usize]) -> impl Fn(&mut ChaCha8Rng) -> Vec<Tensor> {
    move |rng| vec![random(shape_a, -2.0, 2.0, 0.0, rng), random(shape_b, -2.0, 2.0, 0.0, rng)]
}

fn one(shape: &'static [usize], lo: f64, hi: f64, gap: f64) -> impl Fn(&mut ChaCha8Rng) -> Vec<Tensor> {
    move |rng| vec![random(shape, lo, hi, gap, rng)]
}

#[test]
fn elementwise_binary() {
    check_op("add", two(&[3, 4], &[3, 4]), |t, v| t.add(v[0], v[1]));
    check_op("sub", two(&[3, 4], &[3, 4]), |t, v| t.sub(v[0], v[1]));
    check_op("mul", two(&[3, 4], &[3, 4]), |t, v| t.mul(v[0], v[1]));
    check_op(
        "div",
        |rng: &mut ChaCha8Rng| vec![random(&[3, 4], -2.0, 2.0, 0.0, rng), random(&[3, 4], -2.0, 2.0, 0.5, rng)],
        |t, v| t.div(v[0], v[1]),
    );
}

#[test]
fn elementwise_unary() {
    check_op("scale", one(&[4, 3], -2.0, 2.0, 0.0), |t, v| Ok(t.scale(v[0], -1.7)));
    check_op("add_scalar", one(&[4, 3], -2.0, 2.0, 0.0), |t, v| Ok(t.add_scalar(v[0], 0.3)));
    check_op("relu", one(&[4, 3], -2.0, 2.0, 0.05), |t, v| Ok(t.relu(v[0])));
    check_op("tanh", one(&[4, 3], -2.0, 2.0, 0.0), |t, v| Ok(t.tanh(v[0])));
    check_op("sigmoid", one(&[4, 3], -4.0, 4.0, 0.0), |t, v| Ok(t.sigmoid(v[0])));
    check_op("exp", one(&[4, 3], -2.0, 2.0, 0.0), |t, v| Ok(t.exp(v[0])));
    check_op("log", one(&[4, 3], 0.2, 3.0, 0.0), |t, v| Ok(t.log(v[0])));
    check_op("square", one(&[4, 3], -2.0, 2.0, 0.0), |t, v| Ok(t.square(v[0])));
    check_op("sqrt", one(&[4, 3], 0.2, 3.0, 0.0), |t, v| Ok(t.sqrt(v[0])));
    check_op(
        "clamp",
        |rng: &mut ChaCha8Rng| {
            // keep clear of the bounds at ±1
            let mut x = random(&[4, 3], -2.0, 2.0, 0.0, rng);
            for v in x.data_mut() {
                if (v.abs() - 1.0).abs() < 0.05 {
                    *v *= 0.8;
                }
            }
            vec![x]
        },
        |t, v| Ok(t.clamp(v[0], -1.0, 1.0)),
    );
}

#[test]
fn matrix_ops() {
    check_op("matmul", two(&[3, 5], &[5, 2]), |t, v| t.matmul(v[0], v[1]));
    check_op("transpose", one(&[3, 5], -2.0, 2.0, 0.0), |t, v| t.transpose(v[0]));
    check_op("concat0", two(&[2, 3], &[4, 3]), |t, v| t.concat(&[v[0], v[1]], 0));
    check_op("concat1", two(&[3, 2], &[3, 4]), |t, v| t.concat(&[v[0], v[1]], 1));
    check_op("slice0", one(&[5, 3], -2.0, 2.0, 0.0), |t, v| t.slice(v[0], 0, 1, 3));
    check_op("slice1", one(&[3, 5], -2.0, 2.0, 0.0), |t, v| t.slice(v[0], 1, 2, 2));
    check_op("reshape", one(&[3, 4], -2.0, 2.0, 0.0), |t, v| t.reshape(v[0], &[2, 6]));
    check_op("gather_rows", one(&[4, 3], -2.0, 2.0, 0.0), |t, v| t.gather_rows(v[0], &[3, 0, 3, 1, 2, 0]));
}

#[test]
fn reductions() {
    check_op("sum", one(&[3, 4], -2.0, 2.0, 0.0), |t, v| Ok(t.sum(v[0])));
    check_op("mean", one(&[3, 4], -2.0, 2.0, 0.0), |t, v| t.mean(v[0]));
    check_op("sum_axis0", one(&[3, 4], -2.0, 2.0, 0.0), |t, v| t.sum_axis(v[0], 0));
    check_op("sum_axis1", one(&[3, 4], -2.0, 2.0, 0.0), |t, v| t.sum_axis(v[0], 1));
    check_op("mean_axis0", one(&[3, 4], -2.0, 2.0, 0.0), |t, v| t.mean_axis(v[0], 0));
    check_op("mean_axis1", one(&[3, 4], -2.0, 2.0, 0.0), |t, v| t.mean_axis(v[0], 1));
}

#[test]
fn broadcasts() {
    check_op("add_row", two(&[4, 3], &[1, 3]), |t, v| t.add_row(v[0], v[1]));
    check_op("mul_row", two(&[4, 3], &[1, 3]), |t, v| t.mul_row(v[0], v[1]));
    check_op("add_col", two(&[4, 3], &[4, 1]), |t, v| t.add_col(v[0], v[1]));
    check_op("mul_col", two(&[4, 3], &[4, 1]), |t, v| t.mul_col(v[0], v[1]));
}

#[test]
fn normalizations() {
    check_op("softmax1", one(&[4, 5], -3.0, 3.0, 0.0), |t, v| t.softmax(v[0], 1));
    check_op("softmax0", one(&[4, 5], -3.0, 3.0, 0.0), |t, v| t.softmax(v[0], 0));
    check_op("cosine_rows", two(&[5, 3], &[5, 3]), |t, v| t.cosine_rows(v[0], v[1]));
    check_op("layer_norm_rows", one(&[4, 6], -2.0, 2.0, 0.0), |t, v| t.layer_norm_rows(v[0], 1e-5));
}

#[test]
fn fused_spectral_ops() {
    check_op("eigen_reconstruct", two(&[5, 3], &[2, 3]), |t, v| t.eigen_reconstruct(v[0], v[1]));
    check_op(
        "basis_conv",
        |rng: &mut ChaCha8Rng| {
            vec![
                random(&[3, 16], -2.0, 2.0, 0.0, rng),
                random(&[4, 2], -2.0, 2.0, 0.0, rng),
                random(&[3, 2], -2.0, 2.0, 0.0, rng),
                random(&[1, 2], -2.0, 2.0, 0.0, rng),
            ]
        },
        |t, v| t.basis_conv(v[0], v[1], v[2], v[3]),
    );
}
