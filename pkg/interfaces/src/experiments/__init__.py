"""Experiments Package"""
