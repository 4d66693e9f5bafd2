"""heatnet test suite"""
