"""Tessellated Linear Model: piecewise-linear regression over a learned convex tessellation"""
