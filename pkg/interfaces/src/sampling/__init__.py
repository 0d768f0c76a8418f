"""Sampling Package"""
