"""Visualization module: tree reports and tessellation grids"""
