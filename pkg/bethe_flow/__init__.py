"""
bethe_flow package: belief propagation as a transport equation on region lattices.
"""
