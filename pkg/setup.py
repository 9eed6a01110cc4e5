"""Setup."""

from setuptools import setup, find_packages

setup(
    name="smae",
    version="0.1.0",
    packages=find_packages(exclude=["tests"]),
    package_dir={"": "."},
    install_requires=["numpy>=1.21"],
    author="Bruno Morais",
    author_email="brunosmmm@gmail.com",
    description="Structure-guided masked graph autoencoders",
    entry_points={"console_scripts": ["smae=smae.cli:main"]},
)
