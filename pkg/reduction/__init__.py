from reduction.pca import PcaModel, pca_fit, pca_transform, pca_inverse_transform
from reduction.kpca import KpcaModel, kpca_fit, kpca_transform
from reduction.network import NetSpec, Network, TrainConfig, TrainHistory, Adam, train_network, grad_check
from reduction.autoencoder import AeModel, ae_train, ae_encode, ae_reconstruct
from reduction.tuning import Choice, validation_split, tune_pca, tune_kpca, tune_autoencoder

__all__ = [
    "PcaModel",
    "pca_fit",
    "pca_transform",
    "pca_inverse_transform",
    "KpcaModel",
    "kpca_fit",
    "kpca_transform",
    "NetSpec",
    "Network",
    "TrainConfig",
    "TrainHistory",
    "Adam",
    "train_network",
    "grad_check",
    "AeModel",
    "ae_train",
    "ae_encode",
    "ae_reconstruct",
    "Choice",
    "validation_split",
    "tune_pca",
    "tune_kpca",
    "tune_autoencoder",
]
