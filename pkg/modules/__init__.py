# Spatial Clustering Modules Package
