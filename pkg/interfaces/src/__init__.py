"""Gibbs concentration lab package"""
