"""Truthful computation offloading mechanisms and an edge-computing simulator."""
