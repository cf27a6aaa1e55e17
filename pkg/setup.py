from setuptools import setup, find_packages

setup(
    name="spatial_clustering",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "numpy>=1.22.0",
        "scikit-learn>=1.0.0",
        "matplotlib>=3.5.0",
        "typing-extensions>=4.0.0",
        "mypy>=1.0.0",
        "pytest>=7.0.0",
        "black>=22.0.0",
        "flake8>=4.0.0",
    ],
    entry_points={
        "console_scripts": [
            "spatial-cluster=modules.cli_io.cli:main",
        ],
    },
    python_requires=">=3.8",
)
