"""
Neural Network Engine
=====================

Minimal float64 CNN engine used by every experiment.

Components:
- layers: Conv2D, MaxPool2D, Dense, ReLU, Sigmoid, Softmax, Flatten
- network: forward inference, logits and exact gradients
- training: deterministic minibatch SGD
- weights_io: bit-exact EVLN weight files
- datasets: MNIST IDX ingestion
- architectures: network builders and the project RNG
"""
