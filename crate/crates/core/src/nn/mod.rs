//! Deterministic CPU tensor core for the hybrid convolutional/recurrent
//! classifier: layer kernels with hand-written backward passes, binary
//! cross-entropy with L2, Adam, parameter accounting and checkpoints.
//!
//! Everything is generic over [`Scalar`] so the same code trains in `f32`
//! and is gradient-checked in `f64`.

mod adam;
mod arch;
mod checkpoint;
pub mod gradcheck;
mod layers;
mod loss;
mod model;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use arch::{Activation, Architecture, LayerSpec, Shape, REFERENCE_DROPOUT};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layers::{
    conv1d_backward, conv1d_forward, dense_backward, dense_forward, dropout, lstm_backward,
    lstm_forward, maxpool1d_backward, maxpool1d_forward, DropoutMode, LstmCache, LstmGrads,
};
pub use loss::{bce, bce_l2_loss, BCE_EPSILON};
pub use model::{Gradients, Mode, Model, Tape};
pub use tensor::Tensor;

use num_traits::{Float, FromPrimitive};

pub trait Scalar:
    Float + FromPrimitive + Default + std::fmt::Debug + std::iter::Sum + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
