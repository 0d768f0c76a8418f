"""Concentration Package"""
