# Spatial Clustering Package
