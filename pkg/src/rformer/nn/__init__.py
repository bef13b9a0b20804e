from .checkpoint import load_checkpoint, load_into, save_checkpoint, save_model
from .gradcheck import grad_check, model_grad_check
from .layers import (
    EncoderBlock,
    FeedForward,
    LayerNorm,
    Linear,
    Module,
    MultiHeadAttention,
    Param,
    ReLU,
    cross_entropy,
    mse,
    multi_view_attention,
    softmax,
)
from .model import ModelConfig, TokenTransformer
from .optim import Adam, adam_step
