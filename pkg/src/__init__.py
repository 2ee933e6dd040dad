"""mural-forest: unsupervised forests for mixed data with informative missingness"""
__version__ = "1.0.0"
