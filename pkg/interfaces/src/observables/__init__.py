"""Observables Package"""
