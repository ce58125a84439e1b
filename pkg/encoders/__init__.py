"""Package containing the modality encoders: frozen text token embeddings and
the convolutional feature-map encoder of the images."""
from .textencoder import TextEncoder, sinusoidal_positions, text_encode
from .visionencoder import VisionEncoder, ConvStage, vision_encode
