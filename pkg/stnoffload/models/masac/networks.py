import torch
import torch.nn.functional as F
from torch import nn


class Mlp(nn.Module):
    """Multi-layer perceptron: ReLU on hidden layers, linear output.

    ``sizes`` lists every layer width, input first and output last, e.g.
    ``[8, 128, 128, 4]``.
    """

    def __init__(self, sizes, generator=None):
        super().__init__()
        if len(sizes) < 2:
            raise ValueError(f"an Mlp needs at least input and output sizes, got {sizes}")
        self.sizes = list(sizes)
        self.layers = nn.ModuleList(nn.Linear(n, k) for n, k in zip(sizes[:-1], sizes[1:]))
        self.reset_parameters(generator)

    def reset_parameters(self, generator=None):
        for layer in self.layers:
            nn.init.xavier_uniform_(layer.weight, generator=generator)
            nn.init.constant_(layer.bias, 0.0)

    def forward(self, x):
        for i, layer in enumerate(self.layers):
            x = F.relu(layer(x)) if i < len(self.layers) - 1 else layer(x)
        return x

    def flat_parameters(self):
        return nn.utils.parameters_to_vector(self.parameters())

    @torch.no_grad()
    def load_flat_parameters(self, vec):
        nn.utils.vector_to_parameters(vec, self.parameters())
