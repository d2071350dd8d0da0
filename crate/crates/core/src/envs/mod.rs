//! The environment suite, plus [`AnyEnv`] for picking one at runtime.

pub mod cvrp;
pub mod game2048;
pub mod jobshop;
pub mod knapsack;
pub mod maze;
pub mod rubiks_cube;
pub mod sliding_tile;
pub mod snake;
pub mod tsp;

pub use cvrp::{Cvrp, CvrpState};
pub use game2048::{Game2048, Game2048State};
pub use jobshop::{JobShop, JobShopState};
pub use knapsack::{Knapsack, KnapsackState};
pub use maze::{Maze, MazeState};
pub use rubiks_cube::{CubeState, RubiksCube};
pub use sliding_tile::{PuzzleState, SlidingTilePuzzle};
pub use snake::{Snake, SnakeState};
pub use tsp::{Tsp, TspState};

use crate::env::{Environment, Transition};
use crate::error::Result;
use crate::rng::RngKey;
use crate::spec::{Spec, Value};

macro_rules! any_env {
    ($($variant:ident($env:ty, $state:ty)),* $(,)?) => {
        /// Any suite environment, dispatched by enum.
        #[derive(Clone, Debug)]
        pub enum AnyEnv {
            $($variant($env),)*
        }

        /// State of an [`AnyEnv`]; the variant always matches the environment's.
        #[derive(Clone, Debug, PartialEq)]
        pub enum AnyState {
            $($variant($state),)*
        }

        $(
            impl From<$env> for AnyEnv {
                fn from(e: $env) -> Self {
                    AnyEnv::$variant(e)
                }
            }
        )*

        impl Environment for AnyEnv {
            type State = AnyState;

            fn name(&self) -> &str {
                match self { $(AnyEnv::$variant(e) => e.name(),)* }
            }

            fn init(&self, key: RngKey) -> AnyState {
                match self { $(AnyEnv::$variant(e) => AnyState::$variant(e.init(key)),)* }
            }

            fn check_action(&self, state: &AnyState, action: &[i64]) -> Result<()> {
                match (self, state) {
                    $((AnyEnv::$variant(e), AnyState::$variant(s)) => e.check_action(s, action),)*
                    #[allow(unreachable_patterns)]
                    _ => Err(mismatch()),
                }
            }

            fn apply(&self, state: &mut AnyState, action: &[i64]) -> Transition {
                match (self, state) {
                    $((AnyEnv::$variant(e), AnyState::$variant(s)) => e.apply(s, action),)*
                    #[allow(unreachable_patterns)]
                    _ => panic!("{}", mismatch()),
                }
            }

            fn is_done(&self, state: &AnyState) -> bool {
                match (self, state) {
                    $((AnyEnv::$variant(e), AnyState::$variant(s)) => e.is_done(s),)*
                    #[allow(unreachable_patterns)]
                    _ => panic!("{}", mismatch()),
                }
            }

            fn state_key(&self, state: &AnyState) -> RngKey {
                match (self, state) {
                    $((AnyEnv::$variant(e), AnyState::$variant(s)) => e.state_key(s),)*
                    #[allow(unreachable_patterns)]
                    _ => panic!("{}", mismatch()),
                }
            }

            fn action_dims(&self) -> Vec<usize> {
                match self { $(AnyEnv::$variant(e) => e.action_dims(),)* }
            }

            fn action_mask(&self, state: &AnyState, mask: &mut [bool]) {
                match (self, state) {
                    $((AnyEnv::$variant(e), AnyState::$variant(s)) => e.action_mask(s, mask),)*
                    #[allow(unreachable_patterns)]
                    _ => panic!("{}", mismatch()),
                }
            }

            fn observation_spec(&self) -> Spec {
                match self { $(AnyEnv::$variant(e) => e.observation_spec(),)* }
            }

            fn observe(&self, state: &AnyState) -> Value {
                match (self, state) {
                    $((AnyEnv::$variant(e), AnyState::$variant(s)) => e.observe(s),)*
                    #[allow(unreachable_patterns)]
                    _ => panic!("{}", mismatch()),
                }
            }

            fn obs_dim(&self) -> usize {
                match self { $(AnyEnv::$variant(e) => e.obs_dim(),)* }
            }

            fn encode(&self, state: &AnyState, out: &mut [f64]) {
                match (self, state) {
                    $((AnyEnv::$variant(e), AnyState::$variant(s)) => e.encode(s, out),)*
                    #[allow(unreachable_patterns)]
                    _ => panic!("{}", mismatch()),
                }
            }

            fn validate_step(&self, state: &AnyState, action: &[i64]) -> Result<()> {
                match (self, state) {
                    $((AnyEnv::$variant(e), AnyState::$variant(s)) => e.validate_step(s, action),)*
                    #[allow(unreachable_patterns)]
                    _ => Err(mismatch()),
                }
            }
        }

        impl crate::render::Render for AnyEnv {
            fn render(&self, state: &AnyState) -> crate::render::Image {
                match (self, state) {
                    $((AnyEnv::$variant(e), AnyState::$variant(s)) => e.render(s),)*
                    #[allow(unreachable_patterns)]
                    _ => panic!("{}", mismatch()),
                }
            }
        }
    };
}

fn mismatch() -> crate::error::Error {
    crate::error::Error::ContractViolation("state belongs to a different environment".into())
}

any_env! {
    Game2048(Game2048, Game2048State),
    RubiksCube(RubiksCube, CubeState),
    SlidingTilePuzzle(SlidingTilePuzzle, PuzzleState),
    Maze(Maze, MazeState),
    Snake(Snake, SnakeState),
    Tsp(Tsp, TspState),
    Cvrp(Cvrp, CvrpState),
    Knapsack(Knapsack, KnapsackState),
    JobShop(JobShop, JobShopState),
}
