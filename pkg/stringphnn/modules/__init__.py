"""Core modules"""
