//! Architecture presets: network wiring, loss and training overrides per problem pattern.

use std::fmt;
use std::str::FromStr;

use cfn_core::composition::{Combine, ConditionalLayer, Layer, Network, ParallelLayer, SequentialLayer};
use cfn_core::math::Rng;
use cfn_core::metrics::Task;
use cfn_core::nodes::{
    Angle, FunctionNode, Linear, NodeSpec, Polynomial, Radius, Sigmoid, Sinusoidal, Step,
};
use cfn_core::train::TrainConfig;
use cfn_core::{CfnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Parallel feature bank, 64-unit ReLU layer, task head.
    Tabular,
    /// A single one-dimensional sinusoid.
    SymregSin,
    /// Basis-function features, sigmoid hidden layer, three-way softmax head.
    Spiral,
    /// Polar features, four step gates and four specialised experts.
    MoeConcentric,
    /// Ten parallel basis functions and a linear combiner.
    Basis2d,
}

pub const TABULAR_HIDDEN: usize = 64;
pub const SPIRAL_HIDDEN: usize = 32;

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Tabular,
        Preset::SymregSin,
        Preset::Spiral,
        Preset::MoeConcentric,
        Preset::Basis2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Tabular => "tabular",
            Preset::SymregSin => "symreg_sin",
            Preset::Spiral => "spiral",
            Preset::MoeConcentric => "moe_concentric",
            Preset::Basis2d => "basis2d",
        }
    }

    /// Whether features are standardized before training. Presets whose parameters are read
    /// back as formulas in the original coordinates (frequencies, radii) see raw inputs.
    pub fn scales_features(self) -> bool {
        matches!(self, Preset::Tabular | Preset::Spiral)
    }

    /// Training configuration before command-line overrides.
    pub fn config(self) -> TrainConfig {
        let base = TrainConfig::default();
        match self {
            Preset::Tabular => base,
            // Small synthetic problems: a longer, hotter schedule with more patience.
            _ => TrainConfig {
                learning_rate: 0.05,
                epochs: 1500,
                patience: 200,
                lr_decay_every: 500,
                lr_decay_factor: 0.3,
                ..base
            },
        }
    }

    /// Builds a freshly initialized network for `input_dim` features and `outputs` target columns.
    pub fn build(self, input_dim: usize, task: Task, outputs: usize, rng: &mut Rng) -> Result<Network> {
        self.check(input_dim, task, outputs)?;
        let mut init = |spec: NodeSpec| spec.init(rng);
        match self {
            Preset::Tabular => {
                let d = input_dim;
                let features: Layer = ParallelLayer::new(
                    vec![
                        Box::new(Linear::passthrough(d)),
                        init(NodeSpec::polynomial(d, 2))?,
                        init(NodeSpec::gaussian(d))?,
                        init(NodeSpec::sigmoid(d))?,
                        init(NodeSpec::sinusoidal(d))?,
                        init(NodeSpec::exponential(d))?,
                    ],
                    Combine::Concat,
                )?
                .into();
                let width = features.output_dim();
                let hidden = SequentialLayer::new(vec![
                    init(NodeSpec::linear(width, TABULAR_HIDDEN))?,
                    init(NodeSpec::relu(TABULAR_HIDDEN))?,
                ])?;
                let head = head(TABULAR_HIDDEN, task, outputs, &mut init)?;
                Network::new(vec![features, hidden.into(), head])
            }
            Preset::SymregSin => {
                Network::new(vec![SequentialLayer::new(vec![init(NodeSpec::sinusoidal(1))?])?.into()])
            }
            Preset::Spiral => {
                let d = input_dim;
                let mut nodes = Vec::new();
                for _ in 0..5 {
                    nodes.push(init(NodeSpec::gaussian(d))?);
                }
                for _ in 0..4 {
                    nodes.push(init(NodeSpec::sigmoid(d))?);
                }
                for _ in 0..2 {
                    nodes.push(init(NodeSpec::sinusoidal(d))?);
                }
                nodes.push(init(NodeSpec::polynomial(d, 2))?);
                let features: Layer = ParallelLayer::new(nodes, Combine::Concat)?.into();
                let width = features.output_dim();
                // One Sigmoid node per hidden unit is a dense logistic layer.
                let hidden = ParallelLayer::new(
                    (0..SPIRAL_HIDDEN)
                        .map(|_| init(NodeSpec::sigmoid(width)))
                        .collect::<Result<_>>()?,
                    Combine::Concat,
                )?;
                let out = SequentialLayer::new(vec![init(NodeSpec::linear(SPIRAL_HIDDEN, outputs))?])?;
                Network::new(vec![features, hidden.into(), out.into()])
            }
            Preset::MoeConcentric => {
                let polar = ParallelLayer::new(
                    vec![Box::new(Linear::passthrough(2)), Box::new(Radius::new(2)), Box::new(Angle::new(2))],
                    Combine::Concat,
                )?;
                // Features are [x1, x2, r, theta].
                let along = |axis: usize, sign: f64| {
                    let mut d = vec![0.0; 4];
                    d[axis] = sign;
                    d
                };
                let gates: Vec<Box<dyn FunctionNode>> = vec![
                    Box::new(Step::new(along(2, -1.0), 0.8, 4.0)?),
                    Box::new(Step::new(along(2, 1.0), -0.8, 4.0)?),
                    Box::new(Step::new(along(2, 1.0), -1.6, 4.0)?),
                    Box::new(Step::new(along(2, 1.0), -2.4, 4.0)?),
                ];
                let experts: Vec<Box<dyn FunctionNode>> = vec![
                    Box::new(Sinusoidal::new(1.0, rng.uniform(0.5, 2.0), rng.uniform(-0.5, 0.5), along(2, 1.0))),
                    Box::new(Polynomial::new(along(2, 1.0), vec![0.0, 0.0, rng.uniform(-0.1, 0.1)])?),
                    NodeSpec::gaussian(4).init(rng)?,
                    Box::new(Sinusoidal::new(1.0, rng.uniform(0.5, 2.0), rng.uniform(-0.5, 0.5), along(3, 1.0))),
                ];
                let moe = ConditionalLayer::new(gates, experts)?;
                Network::new(vec![polar.into(), moe.into()])
            }
            Preset::Basis2d => {
                let d = input_dim;
                let mut nodes = Vec::new();
                for _ in 0..5 {
                    nodes.push(init(NodeSpec::gaussian(d))?);
                }
                for _ in 0..3 {
                    nodes.push(init(NodeSpec::sinusoidal(d))?);
                }
                for _ in 0..2 {
                    nodes.push(init(NodeSpec::polynomial(d, 2))?);
                }
                let basis = ParallelLayer::new(nodes, Combine::Concat)?;
                let combine = SequentialLayer::new(vec![init(NodeSpec::linear(10, 1))?])?;
                Network::new(vec![basis.into(), combine.into()])
            }
        }
    }

    fn check(self, input_dim: usize, task: Task, outputs: usize) -> Result<()> {
        let fail = |what: String| Err(CfnError::Usage(format!("preset {}: {what}", self.name())));
        if input_dim == 0 {
            return fail("data has no feature columns".into());
        }
        match (task, outputs) {
            (Task::Regression | Task::Binary, 1) => {}
            (Task::Multiclass, k) if k >= 2 => {}
            _ => return fail(format!("{} task with {outputs} target columns", task.name())),
        }
        match self {
            Preset::Tabular => Ok(()),
            Preset::SymregSin if input_dim != 1 || task != Task::Regression => {
                fail("needs one-feature regression data".into())
            }
            Preset::Spiral if task != Task::Multiclass => fail("needs multiclass data".into()),
            Preset::MoeConcentric if input_dim != 2 || task != Task::Regression => {
                fail("needs two-feature regression data".into())
            }
            Preset::Basis2d if task != Task::Regression => fail("needs regression data".into()),
            _ => Ok(()),
        }
    }
}

/// Output layer for the task: a probability for binary, logits for multiclass, a value otherwise.
fn head(
    width: usize,
    task: Task,
    outputs: usize,
    init: &mut impl FnMut(NodeSpec) -> Result<Box<dyn FunctionNode>>,
) -> Result<Layer> {
    let linear = init(NodeSpec::linear(width, outputs))?;
    let nodes = match task {
        Task::Binary => {
            // A fixed logistic: direction 1, offset 0, steepness 1.
            let mut squash = Sigmoid::new(vec![1.0], 0.0, 1.0);
            squash.set_trainable(false);
            vec![linear, Box::new(squash) as Box<dyn FunctionNode>]
        }
        _ => vec![linear],
    };
    Ok(SequentialLayer::new(nodes)?.into())
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = CfnError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                CfnError::Usage(format!("unknown preset `{s}` (known: {})", known.join(", ")))
            })
    }
}
