"""Linear-Quadratic Blind Source Separation - maximum-likelihood toolkit"""

__version__ = "1.0.0"
__author__ = "Source Separation Team"

from .pipeline import TrainingPipeline, train

__all__ = ['TrainingPipeline', 'train']
