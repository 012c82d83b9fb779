use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::seed;

type Eval = Arc<dyn Fn(&[bool], &[f64]) -> f64 + Send + Sync>;
type Partial = Arc<dyn Fn(&[bool], &[f64], usize) -> f64 + Send + Sync>;

/// A function on `{0,1}^S × ℝⁿ` with its partial derivatives in `y`.
#[derive(Clone)]
pub struct TestFunction {
    id: String,
    bits: usize,
    dim: usize,
    f: Eval,
    partial: Partial,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("id", &self.id)
            .field("bits", &self.bits)
            .field("dim", &self.dim)
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        id: impl Into<String>,
        bits: usize,
        dim: usize,
        f: impl Fn(&[bool], &[f64]) -> f64 + Send + Sync + 'static,
        partial: impl Fn(&[bool], &[f64], usize) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return invalid("test functions need at least one continuous coordinate");
        }
        Ok(Self {
            id: id.into(),
            bits,
            dim,
            f: Arc::new(f),
            partial: Arc::new(partial),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// `|S|`
    pub fn bits(&self) -> usize {
        self.bits
    }

    /// `n`
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[bool], y: &[f64]) -> f64 {
        (self.f)(x, y)
    }

    /// `∂f/∂y_i`
    pub fn partial(&self, x: &[bool], y: &[f64], i: usize) -> f64 {
        (self.partial)(x, y, i)
    }

    /// Largest scaled gap `|∂_i f − D_h f| / (1 + |∂_i f|)` between the
    /// analytic partials and central differences at 20 seeded points.
    pub fn check_partials(&self, seed: u64) -> f64 {
        let mut rng = seed::rng(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let x: Vec<bool> = (0..self.bits).map(|_| rng.random()).collect();
            let mut y: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            for i in 0..self.dim {
                let yi = y[i];
                let h = 1e-5 * yi.abs().max(1.0);
                y[i] = yi + h;
                let up = self.eval(&x, &y);
                y[i] = yi - h;
                let down = self.eval(&x, &y);
                y[i] = yi;
                let exact = self.partial(&x, &y, i);
                worst = worst.max(((up - down) / (2.0 * h) - exact).abs() / (1.0 + exact.abs()));
            }
        }
        worst
    }
}

fn bit(b: bool) -> f64 {
    f64::from(u8::from(b))
}

fn sech2(t: f64) -> f64 {
    let c = t.cosh();
    1.0 / (c * c)
}

/// The fixed set of functions used by the checks and the CLI.
pub fn registry() -> Vec<TestFunction> {
    let entries: Vec<Result<TestFunction>> = vec![
        TestFunction::new("constant", 0, 1, |_, _| 3.0, |_, _, _| 0.0),
        TestFunction::new("linear-1d", 0, 1, |_, y| y[0], |_, _, _| 1.0),
        TestFunction::new("quadratic-1d", 0, 1, |_, y| y[0] * y[0], |_, y, _| 2.0 * y[0]),
        TestFunction::new(
            "bump-1d",
            0,
            1,
            |_, y| (-0.5 * y[0] * y[0]).exp(),
            |_, y, _| -y[0] * (-0.5 * y[0] * y[0]).exp(),
        ),
        TestFunction::new(
            "softplus-1d",
            0,
            1,
            |_, y| y[0].max(0.0) + (-y[0].abs()).exp().ln_1p(),
            |_, y, _| 1.0 / (1.0 + (-y[0]).exp()),
        ),
        TestFunction::new(
            "affine-2d",
            0,
            2,
            |_, y| 2.0 * y[0] - y[1] + 1.0,
            |_, _, i| if i == 0 { 2.0 } else { -1.0 },
        ),
        TestFunction::new(
            "sin-cos-2d",
            0,
            2,
            |_, y| y[0].sin() + 0.5 * y[1].cos(),
            |_, y, i| if i == 0 { y[0].cos() } else { -0.5 * y[1].sin() },
        ),
        TestFunction::new("product-2d", 0, 2, |_, y| y[0] * y[1], |_, y, i| y[1 - i]),
        TestFunction::new(
            "cubic-3d",
            0,
            3,
            |_, y| y[0].powi(3) - 3.0 * y[0] + y[1] * y[2],
            |_, y, i| match i {
                0 => 3.0 * y[0] * y[0] - 3.0,
                1 => y[2],
                _ => y[1],
            },
        ),
        TestFunction::new(
            "smooth-abs-6d",
            0,
            6,
            |_, y| {
                y.iter()
                    .enumerate()
                    .map(|(i, v)| (1.0 + v * v).sqrt() / (i + 1) as f64)
                    .sum()
            },
            |_, y, i| y[i] / (1.0 + y[i] * y[i]).sqrt() / (i + 1) as f64,
        ),
        TestFunction::new("bit-1", 1, 1, |x, _| bit(x[0]), |_, _, _| 0.0),
        TestFunction::new("parity-2", 2, 1, |x, _| bit(x[0] ^ x[1]), |_, _, _| 0.0),
        TestFunction::new("bit-plus-gauss", 1, 1, |x, y| bit(x[0]) + y[0], |_, _, _| 1.0),
        TestFunction::new("bit-times-gauss", 1, 1, |x, y| bit(x[0]) * y[0], |x, _, _| bit(x[0])),
        TestFunction::new(
            "mixed-3x2",
            3,
            2,
            |x, y| bit(x[0]) * y[0].sin() + (bit(x[1]) - bit(x[2])) * y[1] + 0.5 * y[0] * y[1],
            |x, y, i| {
                if i == 0 {
                    bit(x[0]) * y[0].cos() + 0.5 * y[1]
                } else {
                    bit(x[1]) - bit(x[2]) + 0.5 * y[0]
                }
            },
        ),
        TestFunction::new(
            "tanh-gated-2x2",
            2,
            2,
            |x, y| (y[0] + bit(x[0]) - bit(x[1])).tanh() * (1.0 + 0.5 * y[1] * y[1]),
            |x, y, i| {
                let t = y[0] + bit(x[0]) - bit(x[1]);
                if i == 0 {
                    sech2(t) * (1.0 + 0.5 * y[1] * y[1])
                } else {
                    t.tanh() * y[1]
                }
            },
        ),
    ];
    entries
        .into_iter()
        .map(|e| e.expect("registry entries are well formed"))
        .collect()
}

pub fn lookup(id: &str) -> Result<TestFunction> {
    registry().into_iter().find(|f| f.id() == id).map_or_else(
        || {
            let ids: Vec<String> = registry().iter().map(|f| f.id().to_string()).collect();
            invalid(format!("unknown test function {id:?}; known: {}", ids.join(", ")))
        },
        Ok,
    )
}
