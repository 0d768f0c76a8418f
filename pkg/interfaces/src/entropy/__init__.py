"""Entropy Package"""
