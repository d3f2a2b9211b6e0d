"""corrbench: a desk-scale benchmark comparing visual representations for
behavior-cloned manipulation policies.

The pipeline is: simulate planar manipulation tasks with scripted experts,
render multi-view RGBD observations, train visual representations
(dense correspondence descriptors, autoencoders, end-to-end features, or
ground-truth points), clone the experts, and evaluate closed-loop success.
"""

__version__ = "0.1.0"
