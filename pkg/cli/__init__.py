"""CLI package"""
