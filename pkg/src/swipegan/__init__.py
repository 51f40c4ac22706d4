"""Desk-scale lab for swipe-keyboard path synthesis, GAN style transfer and CTC recognition."""

__version__ = "0.1.0"
