# -*- coding: utf-8 -*-
from setuptools import setup, find_packages
from effect_lab import __version__

REQUIREMENTS = [
    'Django>=3.2,<5',
    'django-appconf',
    'django-extended-choices',
    'tablib',
    'numpy>=1.21',
    'scipy>=1.7',
    # F.scaled_dot_product_attention
    'torch>=2.0',
    'Pillow>=8',
    'requests>=2.25',
    'urllib3>=1.26',
]

# https://pypi.python.org/pypi?%3Aaction=list_classifiers
CLASSIFIERS = [
    'Development Status :: 4 - Beta',
    'Environment :: Console',
    'Framework :: Django',
    'Framework :: Django :: 3.2',
    'Framework :: Django :: 4.2',
    'Intended Audience :: Science/Research',
    'License :: OSI Approved :: BSD License',
    'Operating System :: OS Independent',
    'Programming Language :: Python',
    'Programming Language :: Python :: 3.8',
    'Programming Language :: Python :: 3.9',
    'Programming Language :: Python :: 3.10',
    'Programming Language :: Python :: 3.11',
    'Topic :: Multimedia :: Video',
    'Topic :: Scientific/Engineering :: Artificial Intelligence',
]

setup(
    name='effect-lab',
    version=__version__,
    description='Synthetic triplets, training and evaluation for effect-aware '
                'video object removal and insertion',
    packages=find_packages(exclude=['docs']),
    license='LICENSE.txt',
    platforms=['OS Independent'],
    install_requires=REQUIREMENTS,
    classifiers=CLASSIFIERS,
    long_description=open('README.rst').read(),
    include_package_data=True,
    zip_safe=False,
    entry_points={
        'console_scripts': [
            'effect-lab = effect_lab.__main__:main',
        ],
    },
)
