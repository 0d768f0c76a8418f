"""Gibbs Package"""
