from setuptools import find_packages, setup

setup(
    name='medtransport',
    version='0.1.0',
    description="Transported stochastic direct and indirect effects with sensitivity analysis for missing mediators",
    long_description=(open('README.md').read()),
    long_description_content_type='text/markdown',
    install_requires=[
        'numpy',
        'pandas',
        'scikit-learn>=0.21.3',
        'scipy',
        'joblib',
        'PyYAML',
        'statsmodels',
    ],
    extras_require={
        'tests': ['pytest'],
    },
    license='MIT',
    packages=find_packages(include=['src', 'src.*']),
    include_package_data=True,
    entry_points={
        'console_scripts': [
            'medtransport = src.cli.main:main',
        ],
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Natural Language :: English',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    zip_safe=False,
)
